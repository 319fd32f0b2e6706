use super::{ChannelSignals, LoopConfig, SignConvention, Variant};
use crate::{Error, Result, Waveform};

/// Current-divider shares of a current injected between two resistors to
/// ground: `(r_b/(r_a+r_b), r_a/(r_a+r_b))`, the first flowing toward `r_a`.
pub fn divider_fractions(r_a: f64, r_b: f64) -> Result<(f64, f64)> {
    if !(r_a.is_finite() && r_a > 0.0 && r_b.is_finite() && r_b > 0.0) {
        return Err(Error::domain(format!(
            "divider resistances must be positive, got {r_a} and {r_b}"
        )));
    }
    let total = r_a + r_b;
    Ok((r_b / total, r_a / total))
}

/// Solves the ideal (zero-length wire) loop sample by sample.
///
/// Output is in the [`SignConvention::Loop`] convention. Both ends see the
/// same wire voltage.
pub fn solve_ideal_loop(
    u_a: &Waveform,
    u_b: &Waveform,
    cfg: &LoopConfig,
    i_inj: Option<&Waveform>,
) -> Result<ChannelSignals> {
    if cfg.variant != Variant::Ideal {
        return Err(Error::config(
            "variant",
            "solve_ideal_loop needs the ideal variant",
        ));
    }
    cfg.validate()?;
    u_a.check_aligned(u_b)?;
    if let Some(inj) = i_inj {
        u_a.check_aligned(inj)?;
    }
    let (ra, rb) = (cfg.r_alice, cfg.r_bob);
    let (f_a, f_b) = divider_fractions(ra, rb)?;
    let total = ra + rb;

    let n = u_a.len();
    let mut i_cha = Vec::with_capacity(n);
    let mut i_chb = Vec::with_capacity(n);
    let mut u_ch = Vec::with_capacity(n);
    for k in 0..n {
        let (ua, ub) = (u_a.samples()[k], u_b.samples()[k]);
        let loop_i = (ua - ub) / total;
        let inj = i_inj.map_or(0.0, |w| w.samples()[k]);
        // The injected share f_a flows back toward Alice, against the loop direction.
        let ia = loop_i - inj * f_a;
        let ib = loop_i + inj * f_b;
        i_cha.push(ia);
        i_chb.push(ib);
        u_ch.push(ua - ia * ra);
    }
    let fs = u_a.sample_rate_hz();
    let u_ch = Waveform::new(u_ch, fs)?;
    ChannelSignals::new(
        Waveform::new(i_cha, fs)?,
        Waveform::new(i_chb, fs)?,
        u_ch.clone(),
        u_ch,
        SignConvention::Loop,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 2000.0;

    fn c(v: f64) -> Waveform {
        Waveform::constant(v, 16, FS).unwrap()
    }

    #[test]
    fn divider_examples() {
        let (a, b) = divider_fractions(1000.0, 9000.0).unwrap();
        assert!((a - 0.9).abs() < 1e-15 && (b - 0.1).abs() < 1e-15);
        assert_eq!(divider_fractions(5.0, 5.0).unwrap(), (0.5, 0.5));
        let (a2, b2) = divider_fractions(9000.0, 1000.0).unwrap();
        assert_eq!((a2, b2), (b, a));
        assert!(divider_fractions(0.0, 1.0).is_err());
        assert!(divider_fractions(1.0, -3.0).is_err());
    }

    #[test]
    fn dc_loop_ohms_law() {
        let cfg = LoopConfig::ideal(1000.0, 9000.0);
        let s = solve_ideal_loop(&c(1.0), &c(0.0), &cfg, None).unwrap();
        for k in 0..16 {
            assert!((s.i_cha.samples()[k] - 1e-4).abs() < 1e-18);
            assert_eq!(s.i_cha.samples()[k], s.i_chb.samples()[k]);
            assert!((s.u_cha.samples()[k] - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn injected_current_splits_by_divider_rule() {
        // Hand-solved single node: V = I·(R_A‖R_B) = 1e-3·900 = 0.9 V,
        // toward Alice V/R_A = 0.9 mA, toward Bob V/R_B = 0.1 mA.
        let cfg = LoopConfig::ideal(1000.0, 9000.0);
        let s = solve_ideal_loop(&c(0.0), &c(0.0), &cfg, Some(&c(1e-3)))
            .unwrap()
            .to_convention(SignConvention::DividerFromInjection);
        assert!((s.i_cha.samples()[0] - 0.9e-3).abs() < 1e-15);
        assert!((s.i_chb.samples()[0] - 0.1e-3).abs() < 1e-15);
        assert!((s.u_cha.samples()[0] - 0.9).abs() < 1e-12);

        let swapped = solve_ideal_loop(&c(0.0), &c(0.0), &cfg.swapped(), Some(&c(1e-3)))
            .unwrap()
            .to_convention(SignConvention::DividerFromInjection);
        assert!((swapped.i_cha.samples()[0] - 0.1e-3).abs() < 1e-15);
        assert!((swapped.i_chb.samples()[0] - 0.9e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_misaligned_or_wrong_variant() {
        let cfg = LoopConfig::ideal(1000.0, 9000.0);
        let short = Waveform::constant(0.0, 3, FS).unwrap();
        assert!(matches!(
            solve_ideal_loop(&c(0.0), &short, &cfg, None),
            Err(Error::Shape(_))
        ));
        let mut cable = cfg;
        cable.variant = Variant::Cable {
            length_m: 100.0,
            n_segments: 4,
        };
        assert!(solve_ideal_loop(&c(0.0), &c(0.0), &cable, None).is_err());
    }
}
