//! Trapezoidal transient solution of the π-section ladder.
//!
//! Every reactive element is replaced by its trapezoidal companion model (a
//! conductance in parallel with a history current source), so each time step
//! is one nodal solve with a constant matrix. The matrix is factored once per
//! solver.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::{CableModel, ChannelSignals, LoopConfig, SignConvention, Variant};
use crate::{Error, Result, Waveform};

type Factored = LU<f64, Dyn, Dyn>;

/// How the two cable ends are driven.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// A voltage source behind a series resistor at each end: the KLJN
    /// generators with their chosen resistors.
    Thevenin { r_a: f64, r_b: f64 },
    /// End node voltages prescribed directly, as when the defenders replay
    /// their measured voltages through the cable model.
    Driven,
}

/// Dynamic state of the ladder: node (capacitor) voltages, series branch
/// (inductor) currents and shunt capacitor currents.
#[derive(Debug, Clone, PartialEq)]
pub struct CableState {
    pub node_v: Vec<f64>,
    pub series_i: Vec<f64>,
    pub cap_i: Vec<f64>,
}

impl CableState {
    pub fn zero(n_segments: usize) -> Self {
        Self {
            node_v: vec![0.0; n_segments + 1],
            series_i: vec![0.0; n_segments],
            cap_i: vec![0.0; n_segments + 1],
        }
    }

    pub fn n_segments(&self) -> usize {
        self.series_i.len()
    }

    fn check(&self, n_segments: usize) -> Result<()> {
        if self.series_i.len() != n_segments
            || self.node_v.len() != n_segments + 1
            || self.cap_i.len() != n_segments + 1
        {
            return Err(Error::shape(format!(
                "cable state sized for {} segments ({} nodes), model has {n_segments}",
                self.series_i.len(),
                self.node_v.len()
            )));
        }
        Ok(())
    }

    /// Total current leaving the line through its shunt elements.
    pub fn shunt_current(&self, model: &CableModel) -> f64 {
        self.cap_i
            .iter()
            .zip(&self.node_v)
            .enumerate()
            .map(|(j, (ic, v))| ic + model.node_conductance(j) * v)
            .sum()
    }

    /// Energy held in the capacitors and inductors.
    pub fn stored_energy(&self, model: &CableModel) -> f64 {
        let cap: f64 = self
            .node_v
            .iter()
            .enumerate()
            .map(|(j, v)| 0.5 * model.node_capacitance(j) * v * v)
            .sum();
        let ind: f64 = self
            .series_i
            .iter()
            .map(|i| 0.5 * model.segment_inductance() * i * i)
            .sum();
        cap + ind
    }
}

/// End currents (loop convention) and end node voltages at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EndSample {
    pub i_a: f64,
    pub i_b: f64,
    pub v_a: f64,
    pub v_b: f64,
}

/// Factored nodal system for one ladder, termination and time step.
pub struct LadderSolver {
    model: CableModel,
    termination: Termination,
    injection_node: usize,
    series_g: f64,
    /// `R − 2L/dt` of a series branch.
    series_hist: f64,
    cap_g: Vec<f64>,
    shunt_g: Vec<f64>,
    /// Node index → unknown index; `None` for prescribed nodes.
    unknown_of: Vec<Option<usize>>,
    coupling: DMatrix<f64>,
    transient_lu: Option<Factored>,
    dc_lu: Option<Factored>,
    dc_coupling: DMatrix<f64>,
    rhs: Vec<f64>,
    x: DVector<f64>,
}

impl LadderSolver {
    pub fn new(
        model: &CableModel,
        termination: Termination,
        injection_node: usize,
        dt: f64,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = model.n_segments;
        if injection_node > n {
            return Err(Error::shape(format!(
                "injection node {injection_node} outside ladder of {n} segments"
            )));
        }
        if let Termination::Thevenin { r_a, r_b } = termination {
            if !(r_a > 0.0 && r_b > 0.0 && r_a.is_finite() && r_b.is_finite()) {
                return Err(Error::domain("termination resistances must be positive"));
            }
        }
        let nodes = n + 1;
        let r = model.segment_resistance();
        let l = model.segment_inductance();
        let series_g = 1.0 / (r + 2.0 * l / dt);
        let cap_g: Vec<f64> = (0..nodes)
            .map(|j| 2.0 * model.node_capacitance(j) / dt)
            .collect();
        let shunt_g: Vec<f64> = (0..nodes).map(|j| model.node_conductance(j)).collect();

        let mut unknown_of = vec![None; nodes];
        let mut count = 0;
        for (j, slot) in unknown_of.iter_mut().enumerate() {
            let fixed = matches!(termination, Termination::Driven) && (j == 0 || j == n);
            if !fixed {
                *slot = Some(count);
                count += 1;
            }
        }

        let assemble = |branch_g: f64, node_g: &dyn Fn(usize) -> f64| {
            let mut y = DMatrix::<f64>::zeros(nodes, nodes);
            for k in 0..n {
                y[(k, k)] += branch_g;
                y[(k + 1, k + 1)] += branch_g;
                y[(k, k + 1)] -= branch_g;
                y[(k + 1, k)] -= branch_g;
            }
            for j in 0..nodes {
                y[(j, j)] += node_g(j);
            }
            if let Termination::Thevenin { r_a, r_b } = termination {
                y[(0, 0)] += 1.0 / r_a;
                y[(n, n)] += 1.0 / r_b;
            }
            y
        };
        let y_tr = assemble(series_g, &|j| cap_g[j] + shunt_g[j]);
        let (transient_lu, coupling) = partition(&y_tr, &unknown_of, count)?;
        let (dc_lu, dc_coupling) = if r > 0.0 {
            let y_dc = assemble(1.0 / r, &|j| shunt_g[j]);
            partition(&y_dc, &unknown_of, count)?
        } else {
            (None, DMatrix::zeros(nodes, nodes))
        };

        Ok(Self {
            model: *model,
            termination,
            injection_node,
            series_g,
            series_hist: r - 2.0 * l / dt,
            cap_g,
            shunt_g,
            unknown_of,
            coupling,
            transient_lu,
            dc_lu,
            dc_coupling,
            rhs: vec![0.0; nodes],
            x: DVector::zeros(count),
        })
    }

    pub fn model(&self) -> &CableModel {
        &self.model
    }

    /// Whether a DC operating point exists (it needs nonzero series
    /// resistance).
    pub fn has_dc_operating_point(&self) -> bool {
        self.dc_lu.is_some() || self.x.is_empty()
    }

    /// Static solution for constant drives: capacitors open, inductors shorted.
    ///
    /// `drive_a`/`drive_b` are source voltages under a Thevenin termination
    /// and end-node voltages under [`Termination::Driven`].
    pub fn dc_operating_point(
        &mut self,
        drive_a: f64,
        drive_b: f64,
        injected: f64,
    ) -> Result<(CableState, EndSample)> {
        let n = self.model.n_segments;
        let r = self.model.segment_resistance();
        if r == 0.0 {
            return Err(Error::domain(
                "lossless line has no unique DC operating point",
            ));
        }
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        self.load_sources(drive_a, drive_b, injected);
        let mut v = vec![0.0; n + 1];
        self.fix_nodes(&mut v, drive_a, drive_b);
        solve_into(
            self.dc_lu.as_ref(),
            &self.dc_coupling,
            &self.unknown_of,
            &self.rhs,
            &mut self.x,
            &mut v,
        )?;
        let series_i: Vec<f64> = (0..n).map(|k| (v[k] - v[k + 1]) / r).collect();
        let state = CableState {
            node_v: v,
            series_i,
            cap_i: vec![0.0; n + 1],
        };
        let out = self.end_sample(&state, drive_a, drive_b, injected);
        Ok((state, out))
    }

    /// Advances `state` by one time step.
    pub fn step(
        &mut self,
        state: &mut CableState,
        drive_a: f64,
        drive_b: f64,
        injected: f64,
    ) -> Result<EndSample> {
        let n = self.model.n_segments;
        state.check(n)?;
        self.rhs.iter_mut().for_each(|v| *v = 0.0);

        let mut series_h = vec![0.0; n];
        for (k, h) in series_h.iter_mut().enumerate() {
            let v_prev = state.node_v[k] - state.node_v[k + 1];
            *h = self.series_g * (v_prev - self.series_hist * state.series_i[k]);
            self.rhs[k] -= *h;
            self.rhs[k + 1] += *h;
        }
        let mut cap_h = vec![0.0; n + 1];
        for (j, h) in cap_h.iter_mut().enumerate() {
            *h = -self.cap_g[j] * state.node_v[j] - state.cap_i[j];
            self.rhs[j] -= *h;
        }
        self.load_sources(drive_a, drive_b, injected);

        let mut v = vec![0.0; n + 1];
        self.fix_nodes(&mut v, drive_a, drive_b);
        solve_into(
            self.transient_lu.as_ref(),
            &self.coupling,
            &self.unknown_of,
            &self.rhs,
            &mut self.x,
            &mut v,
        )?;

        for k in 0..n {
            state.series_i[k] = self.series_g * (v[k] - v[k + 1]) + series_h[k];
        }
        for j in 0..=n {
            state.cap_i[j] = self.cap_g[j] * v[j] + cap_h[j];
        }
        state.node_v = v;
        Ok(self.end_sample(state, drive_a, drive_b, injected))
    }

    fn load_sources(&mut self, drive_a: f64, drive_b: f64, injected: f64) {
        let n = self.model.n_segments;
        self.rhs[self.injection_node] += injected;
        if let Termination::Thevenin { r_a, r_b } = self.termination {
            self.rhs[0] += drive_a / r_a;
            self.rhs[n] += drive_b / r_b;
        }
    }

    fn fix_nodes(&self, v: &mut [f64], drive_a: f64, drive_b: f64) {
        if let Termination::Driven = self.termination {
            let n = self.model.n_segments;
            v[0] = drive_a;
            v[n] = drive_b;
        }
    }

    fn end_sample(
        &self,
        state: &CableState,
        drive_a: f64,
        drive_b: f64,
        injected: f64,
    ) -> EndSample {
        let n = self.model.n_segments;
        let v_a = state.node_v[0];
        let v_b = state.node_v[n];
        match self.termination {
            Termination::Thevenin { r_a, r_b } => EndSample {
                i_a: (drive_a - v_a) / r_a,
                i_b: (v_b - drive_b) / r_b,
                v_a,
                v_b,
            },
            Termination::Driven => {
                let inj_at = |node: usize| {
                    if self.injection_node == node {
                        injected
                    } else {
                        0.0
                    }
                };
                let i_a = state.series_i[0] + state.cap_i[0] + self.shunt_g[0] * v_a - inj_at(0);
                let i_b =
                    state.series_i[n - 1] - state.cap_i[n] - self.shunt_g[n] * v_b + inj_at(n);
                EndSample { i_a, i_b, v_a, v_b }
            }
        }
    }
}

/// Splits the full nodal matrix into the factored unknown block and the full
/// matrix kept for eliminating prescribed nodes.
fn partition(
    y: &DMatrix<f64>,
    unknown_of: &[Option<usize>],
    count: usize,
) -> Result<(Option<Factored>, DMatrix<f64>)> {
    if count == 0 {
        return Ok((None, y.clone()));
    }
    let mut block = DMatrix::<f64>::zeros(count, count);
    for (i, ui) in unknown_of.iter().enumerate() {
        for (j, uj) in unknown_of.iter().enumerate() {
            if let (Some(a), Some(b)) = (ui, uj) {
                block[(*a, *b)] = y[(i, j)];
            }
        }
    }
    let lu = block.lu();
    if !lu.is_invertible() {
        return Err(Error::domain("singular ladder matrix"));
    }
    Ok((Some(lu), y.clone()))
}

fn solve_into(
    lu: Option<&Factored>,
    y: &DMatrix<f64>,
    unknown_of: &[Option<usize>],
    rhs: &[f64],
    x: &mut DVector<f64>,
    v: &mut [f64],
) -> Result<()> {
    let Some(lu) = lu else {
        return Ok(());
    };
    for (i, ui) in unknown_of.iter().enumerate() {
        if let Some(a) = ui {
            let mut r = rhs[i];
            for (j, uj) in unknown_of.iter().enumerate() {
                if uj.is_none() {
                    r -= y[(i, j)] * v[j];
                }
            }
            x[*a] = r;
        }
    }
    if !lu.solve_mut(x) {
        return Err(Error::domain("ladder solve failed"));
    }
    for (i, ui) in unknown_of.iter().enumerate() {
        if let Some(a) = ui {
            v[i] = x[*a];
        }
    }
    Ok(())
}

/// One trapezoidal step of the KLJN loop over a cable, from `state`.
///
/// Builds and factors the solver on every call; use [`LadderSolver`] to run
/// many steps.
pub fn step_transient(
    model: &CableModel,
    cfg: &LoopConfig,
    end_voltages: (f64, f64),
    i_inj: f64,
    state: &CableState,
    dt: f64,
) -> Result<(CableState, EndSample)> {
    state.check(model.n_segments)?;
    let mut solver = LadderSolver::new(
        model,
        Termination::Thevenin {
            r_a: cfg.r_alice,
            r_b: cfg.r_bob,
        },
        cfg.injection_node(model.n_segments),
        dt,
    )?;
    let mut next = state.clone();
    let out = solver.step(&mut next, end_voltages.0, end_voltages.1, i_inj)?;
    Ok((next, out))
}

fn check_model_matches(model: &CableModel, cfg: &LoopConfig) -> Result<()> {
    let (length_m, n_segments, killer) = match cfg.variant {
        Variant::Ideal => {
            return Err(Error::config("variant", "ideal variant has no cable model"));
        }
        Variant::Cable {
            length_m,
            n_segments,
        } => (length_m, n_segments, false),
        Variant::CableWithKiller {
            length_m,
            n_segments,
        } => (length_m, n_segments, true),
    };
    if model.length_m != length_m
        || model.n_segments != n_segments
        || model.killer_enabled != killer
    {
        return Err(Error::config(
            "variant",
            "cable model does not match the loop variant",
        ));
    }
    Ok(())
}

/// Runs the solver over whole waveforms. Sample 0 is the DC operating point
/// of the first drive values (zero state for a lossless line).
fn run(
    solver: &mut LadderSolver,
    n_segments: usize,
    a: &[f64],
    b: &[f64],
    inj: Option<&[f64]>,
) -> Result<Vec<EndSample>> {
    let inj_at = |k: usize| inj.map_or(0.0, |w| w[k]);
    let (mut state, first) = if solver.model().segment_resistance() > 0.0 {
        solver.dc_operating_point(a[0], b[0], inj_at(0))?
    } else {
        let mut s = CableState::zero(n_segments);
        let out = solver.step(&mut s, a[0], b[0], inj_at(0))?;
        (s, out)
    };
    let mut out = Vec::with_capacity(a.len());
    out.push(first);
    for k in 1..a.len() {
        out.push(solver.step(&mut state, a[k], b[k], inj_at(k))?);
    }
    Ok(out)
}

fn to_waveforms(samples: &[EndSample], fs: f64) -> Result<[Waveform; 4]> {
    let col = |f: fn(&EndSample) -> f64| Waveform::new(samples.iter().map(f).collect(), fs);
    Ok([
        col(|s| s.i_a)?,
        col(|s| s.i_b)?,
        col(|s| s.v_a)?,
        col(|s| s.v_b)?,
    ])
}

/// Solves the KLJN loop over a cable for whole bit-period waveforms.
/// Output is in the [`SignConvention::Loop`] convention.
pub fn solve_cable_loop(
    model: &CableModel,
    cfg: &LoopConfig,
    u_a: &Waveform,
    u_b: &Waveform,
    i_inj: Option<&Waveform>,
) -> Result<ChannelSignals> {
    cfg.validate()?;
    check_model_matches(model, cfg)?;
    u_a.check_aligned(u_b)?;
    if let Some(w) = i_inj {
        u_a.check_aligned(w)?;
    }
    let mut solver = LadderSolver::new(
        model,
        Termination::Thevenin {
            r_a: cfg.r_alice,
            r_b: cfg.r_bob,
        },
        cfg.injection_node(model.n_segments),
        u_a.dt(),
    )?;
    let samples = run(
        &mut solver,
        model.n_segments,
        u_a.samples(),
        u_b.samples(),
        i_inj.map(|w| w.samples()),
    )?;
    let [i_a, i_b, v_a, v_b] = to_waveforms(&samples, u_a.sample_rate_hz())?;
    ChannelSignals::new(i_a, i_b, v_a, v_b, SignConvention::Loop)
}

/// Currents a bare cable draws at its ends when its end voltages follow
/// `u_a` and `u_b`. Returns `(i_a, i_b)` in the loop convention.
pub fn drive_cable_ends(
    model: &CableModel,
    u_a: &Waveform,
    u_b: &Waveform,
) -> Result<(Waveform, Waveform)> {
    u_a.check_aligned(u_b)?;
    let mut solver = LadderSolver::new(model, Termination::Driven, 0, u_a.dt())?;
    let samples = run(
        &mut solver,
        model.n_segments,
        u_a.samples(),
        u_b.samples(),
        None,
    )?;
    let [i_a, i_b, _, _] = to_waveforms(&samples, u_a.sample_rate_hz())?;
    Ok((i_a, i_b))
}
