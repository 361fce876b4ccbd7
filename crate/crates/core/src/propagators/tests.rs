use super::*;
use crate::fields::gaussian;
use proptest::prelude::*;

fn feynman(eps: f64) -> Prescription {
    Prescription::new(PrescriptionKind::Feynman, eps).unwrap()
}

/// Band-limited field with no energy where `|p(zeta)| <= 0.2 |zeta|^2`.
fn off_characteristic(g: &GridSpec, seed: u64) -> SpectralField {
    project_off_characteristic(&SpectralField::random_band_limited(g.clone(), 0.5, seed), 0.2)
}

fn rel_err(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `int_{-inf}^{a} exp(-x^2 / (4 w^2)) dx` by composite Simpson from `-12 w`.
fn half_line_gaussian(a: f64, w: f64) -> f64 {
    let lo = -12.0 * w;
    if a <= lo {
        return 0.0;
    }
    let n = 2000;
    let h = (a - lo) / n as f64;
    let f = |x: f64| (-x * x / (4.0 * w * w)).exp();
    let mut s = f(lo) + f(a);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Damped retarded solution `-1/2 int_{|x-y| <= t-s} exp(-eps (t-s)) f(s, y)` of a
/// centred Gaussian `A exp(-(x^2 + t^2) / (2 w^2))`.
///
/// `exp(eps s) f` is a Gaussian centred at `s0 = eps w^2`, which separates in
/// the null coordinates `t - x`, `t + x`.
fn damped_dalembert(t: f64, x: f64, amp: f64, w: f64, eps: f64) -> f64 {
    let s0 = eps * w * w;
    let shift = (0.5 * eps * eps * w * w).exp();
    -0.25 * amp * shift * (-eps * t).exp() * half_line_gaussian(t - x - s0, w) * half_line_gaussian(t + x - s0, w)
}

#[test]
fn wick_symbol_examples() {
    let one = wick_symbol(&[0.0, 1.0], WickParameter::imaginary(0.0).unwrap());
    assert!((one - C64::new(1.0, 0.0)).norm() < 1e-15);
    let euclid = wick_symbol(&[0.0, 1.0], WickParameter::imaginary(PI / 2.0).unwrap());
    assert!((euclid - C64::new(-1.0, 0.0)).norm() < 1e-15);
    let null = wick_symbol(&[1.0, 0.0, 0.0, 1.0], WickParameter::imaginary(0.0).unwrap());
    assert_eq!(null, C64::default());
    assert!(WickParameter::imaginary(3.5).is_err());
}

#[test]
fn wick_multiplier_nonvanishing_off_real_axis() {
    let g = GridSpec::cube(3, 8.0, 8).unwrap();
    for t in [1e-3, 0.5, PI / 2.0, -PI / 3.0] {
        WickParameter::imaginary(t).unwrap().check_nonvanishing(&g).unwrap();
    }
}

#[test]
fn prescriptions_parse_and_pair() {
    for k in PrescriptionKind::ALL {
        assert_eq!(k.adjoint().adjoint(), k);
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s.trim_matches('"').parse::<PrescriptionKind>().unwrap(), k);
    }
    assert!("causal".parse::<PrescriptionKind>().is_err());
    assert!(Prescription::new(PrescriptionKind::Retarded, 0.0).is_err());
    assert!(Prescription::new(PrescriptionKind::Retarded, -1.0).is_err());
}

#[test]
fn propagate_examples() {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let zero = SpectralField::zeros(g.clone());
    for k in PrescriptionKind::ALL {
        let out = propagate(&zero, &Prescription::new(k, 0.1).unwrap()).unwrap();
        assert!(out.field.values().iter().all(|v| *v == C64::default()));
    }
    let eps = 0.05;
    let mode = SpectralField::plane_wave(g.clone(), &[0, 1], C64::new(1.0, 0.0));
    let out = propagate(&mode, &feynman(eps)).unwrap().field;
    let zeta = [0.0, 2.0 * PI / 16.0];
    let m = wick_symbol(&zeta, WickParameter::imaginary(eps).unwrap());
    let expect: Vec<C64> = mode.values().iter().map(|v| v / m).collect();
    assert!(rel_err(out.values(), &expect) < 1e-12);
}

#[test]
fn retarded_pulse_matches_dalembert() {
    let (side, points, w, amp) = (64.0, 256, 1.0, 1.0);
    let g = GridSpec::cube(2, side, points).unwrap();
    let eps = 14.0 / side;
    let f = gaussian(&g, &[0.0, 0.0], w, amp);
    let u = propagate(&f, &Prescription::new(PrescriptionKind::Retarded, eps).unwrap()).unwrap().field;
    let horizon = 0.5 * side - 6.0 * w;
    let mut got = Vec::new();
    let mut expect = Vec::new();
    let mut z = [0.0; 2];
    for (flat, v) in u.values().iter().enumerate() {
        g.position(flat, &mut z);
        let (x, t) = (z[0], z[1]);
        if t < horizon {
            got.push(*v);
            expect.push(C64::new(damped_dalembert(t, x, amp, w, eps), 0.0));
        }
    }
    let err = rel_err(&got, &expect);
    assert!(err <= 1e-2, "relative L2 error {err:e}");
}

#[test]
fn residual_examples() {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let f = SpectralField::random_band_limited(g.clone(), 0.5, 4);
    for k in PrescriptionKind::ALL {
        let pr = Prescription::new(k, 0.02).unwrap();
        let u = propagate(&f, &pr).unwrap().field;
        assert!(residual_prescription(&f, &u, &pr).unwrap().value <= 1e-12);
        if let Some(theta) = pr.wick_parameter() {
            assert!(residual(&f, &u, theta).unwrap().value <= 1e-12);
        }
    }
    let zero = SpectralField::zeros(g.clone());
    let r = residual(&f, &zero, WickParameter::imaginary(0.0).unwrap()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-14 && r.relative);
    let r = residual(&zero, &f, WickParameter::imaginary(0.0).unwrap()).unwrap();
    assert!(!r.relative && r.value > 0.0);
}

#[test]
fn unregularized_residual_shrinks_with_eps() {
    // off the cone |m_eps - p| / |m_eps| <= 2 sin(eps) / (0.2 - 2 sin(eps))
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let f = off_characteristic(&g, 8);
    let theta0 = WickParameter::imaginary(0.0).unwrap();
    let mut last = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let u = propagate(&f, &feynman(eps)).unwrap().field;
        let r = residual(&f, &u, theta0).unwrap().value;
        assert!(r < last);
        assert!(r <= 12.0 * eps, "eps = {eps}: {r}");
        last = r;
    }
}

#[test]
fn coarse_grid_flag() {
    let g = GridSpec::cube(2, 16.0, 16).unwrap();
    let f = SpectralField::random_band_limited(g.clone(), 0.5, 1);
    let gap = symbol_gap(&g);
    assert!(propagate(&f, &feynman(0.1 * gap)).unwrap().meta.coarse_grid_warning);
    assert!(!propagate(&f, &feynman(gap)).unwrap().meta.coarse_grid_warning);
}

#[test]
fn zero_mode_policy() {
    let g = GridSpec::cube(2, 8.0, 16).unwrap();
    let constant = SpectralField::from_fn(g.clone(), |_| C64::new(1.0, 0.0));
    let exclude = feynman(0.1).with_policy(ZeroModePolicy::Exclude);
    assert!(matches!(propagate(&constant, &exclude), Err(Error::ExcludedMode(_))));
    let out = propagate(&constant, &feynman(0.1)).unwrap();
    assert!(out.meta.zero_mode_singular && out.field.l2_norm() < 1e-12);
    let ret = Prescription::new(PrescriptionKind::Retarded, 0.1).unwrap().with_policy(ZeroModePolicy::Exclude);
    assert!(!propagate(&constant, &ret).unwrap().meta.zero_mode_singular);
    let mp = mode_profile(0.0, &exclude, &TimeGrid { dt: 0.1, half: 10 });
    assert!(matches!(mp, Err(Error::ExcludedMode(_))));
}

#[test]
fn retarded_and_advanced_profiles() {
    let grid = TimeGrid { dt: 0.01, half: 800 };
    for omega in [0.7, 2.0, 5.0] {
        let eps = 1e-3 * omega;
        let ret = mode_profile(omega, &Prescription::new(PrescriptionKind::Retarded, eps).unwrap(), &grid).unwrap();
        let adv = mode_profile(omega, &Prescription::new(PrescriptionKind::Advanced, eps).unwrap(), &grid).unwrap();
        let oracle: Vec<C64> = ret
            .t
            .iter()
            .map(|&t| {
                let h = if t > 0.0 { 1.0 } else if t == 0.0 { 0.5 } else { 0.0 };
                C64::new(-h * (-eps * t).exp() * (omega * t).sin() / omega, 0.0)
            })
            .collect();
        assert!(rel_err(&ret.values, &oracle) <= 1e-3);
        let mirrored: Vec<C64> = adv.values.iter().rev().copied().collect();
        assert!(rel_err(&mirrored, &ret.values) <= 1e-10);
    }
}

#[test]
fn feynman_profiles_match_contour_oracle() {
    let grid = TimeGrid { dt: 0.01, half: 600 };
    for omega in [0.5, 1.0, 3.0] {
        let eps = 1e-3 * omega;
        let wz = C64::from_polar(omega, eps);
        let fey = mode_profile(omega, &feynman(eps), &grid).unwrap();
        let oracle: Vec<C64> = fey
            .t
            .iter()
            .map(|&t| C64::i() * C64::from_polar(1.0, 2.0 * eps) * (C64::i() * wz * t.abs()).exp() / (2.0 * wz))
            .collect();
        assert!(rel_err(&fey.values, &oracle) <= 1e-3);
        let anti = mode_profile(omega, &Prescription::new(PrescriptionKind::AntiFeynman, eps).unwrap(), &grid).unwrap();
        let conj: Vec<C64> = fey.values.iter().map(|v| v.conj()).collect();
        assert!(rel_err(&anti.values, &conj) <= 1e-10);
        let literal: Vec<C64> = anti
            .t
            .iter()
            .map(|&t| C64::from_polar(1.0, -omega * t.abs()) / (2.0 * C64::i() * omega))
            .collect();
        let short: Vec<usize> = (0..anti.t.len()).filter(|&i| anti.t[i].abs() <= 1.0 / omega).collect();
        let a: Vec<C64> = short.iter().map(|&i| anti.values[i]).collect();
        let b: Vec<C64> = short.iter().map(|&i| literal[i]).collect();
        assert!(rel_err(&a, &b) <= 1e-2);
    }
}

#[test]
fn feynman_frequency_signature() {
    let half = 8192;
    let grid = TimeGrid { dt: 0.02, half };
    for omega in [1.0, 2.5, 6.0] {
        let eps = 1e-3 * omega;
        for (kind, sign) in [(PrescriptionKind::Feynman, 1.0), (PrescriptionKind::AntiFeynman, -1.0)] {
            let prof = mode_profile(omega, &Prescription::new(kind, eps).unwrap(), &grid).unwrap();
            let mut pos: Vec<C64> = prof.values[half + 1..].to_vec();
            let len = pos.len();
            fft_1d(&mut pos, FftDirection::Forward);
            let total: f64 = pos.iter().map(|c| c.norm_sqr()).sum();
            let side: f64 = (1..len / 2)
                .map(|k| {
                    let j = if sign > 0.0 { k } else { len - k };
                    pos[j].norm_sqr()
                })
                .sum();
            assert!(side / total >= 0.99, "{kind:?} omega = {omega}: {}", side / total);
        }
    }
}

#[test]
fn scaling_examples() {
    let g = GridSpec::new(vec![16.0, 32.0], vec![32, 128]).unwrap();
    let f = gaussian(&g, &[0.5, -1.0], 1.2, 1.0);
    let id = scaling_conjugate(&f, 0.0).unwrap();
    assert!(rel_err(id.values(), f.values()) < 1e-12);
    let a = scaling_conjugate(&f, 0.3).unwrap();
    assert!((a.l2_norm() - f.l2_norm()).abs() <= 1e-6 * f.l2_norm());
    let ab = scaling_conjugate(&scaling_conjugate(&f, 0.3).unwrap(), -0.5).unwrap();
    let direct = scaling_conjugate(&f, -0.2).unwrap();
    assert!(rel_err(ab.values(), direct.values()) < 1e-6);
    assert!(matches!(scaling_conjugate(&f, -2.0), Err(Error::Overflow(_))));
}


#[test]
fn continuation_examples() {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let f = off_characteristic(&g, 1);
    let h = off_characteristic(&g, 2);
    let euclid = WickParameter::imaginary(PI / 2.0).unwrap();
    let vals = wick_continuation_study(&f, &h, &[euclid; 3]).unwrap();
    assert!(vals.iter().all(|v| *v == vals[0]));
    let direct = {
        let spec_f = f.spectrum();
        let spec_h = h.spectrum();
        let mut s = C64::default();
        let mut xi = [0.0; 2];
        for flat in 0..g.len() {
            g.frequency(flat, &mut xi);
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            if r2 > 0.0 {
                s += spec_h[flat].conj() * spec_f[flat] / -r2;
            }
        }
        s * g.parseval_scale()
    };
    assert!((vals[0] - direct).norm() <= 1e-12 * direct.norm());

    let mode = SpectralField::plane_wave(g.clone(), &[2, 1], C64::new(1.0, 0.0));
    let mode = mode.scale(C64::new(1.0 / mode.l2_norm(), 0.0));
    let path: Vec<WickParameter> = [1.0, 0.5, 0.1].iter().map(|&t| WickParameter::imaginary(t).unwrap()).collect();
    let zeta = [2.0 * PI / 16.0 * 2.0, 2.0 * PI / 16.0];
    for (v, p) in wick_continuation_study(&mode, &mode, &path).unwrap().iter().zip(&path) {
        assert!((v - 1.0 / wick_symbol(&zeta, *p)).norm() < 1e-10);
    }
    assert!(wick_continuation_study(&f, &h, &[WickParameter::imaginary(0.0).unwrap()]).is_err());
}

#[test]
fn continuation_limit_matches_feynman_pairing() {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let f = off_characteristic(&g, 3);
    let h = off_characteristic(&g, 4);
    assert!(near_characteristic_fraction(&f, 0.1) < 1e-3);
    let eps = 1e-4;
    let path: Vec<WickParameter> = (0..8)
        .map(|j| WickParameter::imaginary(0.8 * 0.3f64.powi(j)).unwrap())
        .chain(std::iter::once(WickParameter::imaginary(eps).unwrap()))
        .collect();
    let vals = wick_continuation_study(&f, &h, &path).unwrap();
    let diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
    let u = propagate(&f, &feynman(eps)).unwrap().field;
    let pairing = h.inner(&u).unwrap();
    let last = *vals.last().unwrap();
    assert!((last - pairing).norm() <= 1e-3 * pairing.norm());
}

#[test]
fn off_characteristic_projection() {
    let g = GridSpec::cube(2, 16.0, 32).unwrap();
    let f = SpectralField::random_band_limited(g.clone(), 0.5, 9);
    assert!(near_characteristic_fraction(&f, 0.2) > 0.0);
    let p = project_off_characteristic(&f, 0.2);
    assert_eq!(near_characteristic_fraction(&p, 0.2), 0.0);
    let q = project_off_characteristic(&p, 0.2);
    assert_eq!(p.values(), q.values());
}

#[test]
fn cone_leakage_examples() {
    let g = GridSpec::cube(2, 16.0, 16).unwrap();
    let spike = |x: usize, t: usize| {
        let mut v = vec![C64::default(); g.len()];
        v[g.ravel(&[x, t])] = C64::new(1.0, 0.0);
        SpectralField::from_values(g.clone(), v).unwrap()
    };
    // index 8 is the origin; unit spacing
    assert_eq!(forward_cone_leakage(&spike(11, 12), &[0.0, 0.0], 0.0).unwrap(), 0.0);
    assert_eq!(forward_cone_leakage(&spike(13, 12), &[0.0, 0.0], 0.0).unwrap(), 1.0);
    assert_eq!(forward_cone_leakage(&spike(13, 12), &[0.0, 0.0], 1.0).unwrap(), 0.0);
    assert_eq!(forward_cone_leakage(&spike(8, 7), &[0.0, 0.0], 0.0).unwrap(), 1.0);
    // periodic distance from x = 7 to x = -7 is 2
    assert_eq!(forward_cone_leakage(&spike(15, 10), &[7.0, 0.0], 0.0).unwrap(), 0.0);
    assert!(forward_cone_leakage(&spike(8, 8), &[0.0], 0.0).is_err());

    let g = GridSpec::cube(2, 32.0, 256).unwrap();
    let f = gaussian(&g, &[0.0, -8.0], 0.5, 1.0);
    let eps = Prescription::default_eps(&g);
    let ret = propagate(&f, &Prescription::new(PrescriptionKind::Retarded, eps).unwrap()).unwrap().field;
    let adv = propagate(&f, &Prescription::new(PrescriptionKind::Advanced, eps).unwrap()).unwrap().field;
    assert!(forward_cone_leakage(&ret, &[0.0, -8.0], 3.0).unwrap() < 1e-6);
    assert!(forward_cone_leakage(&adv, &[0.0, -8.0], 3.0).unwrap() > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linearity(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0, k in 0usize..4) {
        let g = GridSpec::cube(2, 12.0, 24).unwrap();
        let f = SpectralField::random_band_limited(g.clone(), 0.7, seed);
        let h = SpectralField::random_band_limited(g, 0.7, seed + 7);
        let pr = Prescription::new(PrescriptionKind::ALL[k], 0.05).unwrap();
        let (ca, cb) = (C64::new(a, 0.3), C64::new(b, -0.1));
        let lhs = propagate(&f.combine(ca, &h, cb).unwrap(), &pr).unwrap().field;
        let rhs = propagate(&f, &pr).unwrap().field.combine(ca, &propagate(&h, &pr).unwrap().field, cb).unwrap();
        let scale = rhs.l2_norm().max(f.l2_norm());
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * scale);
    }

    #[test]
    fn adjoint_pairs(seed in 0u64..10_000, eps in 0.01f64..0.5, k in 0usize..4) {
        let g = GridSpec::cube(2, 12.0, 24).unwrap();
        let f = SpectralField::random_band_limited(g.clone(), 0.8, seed);
        let h = SpectralField::random_band_limited(g, 0.8, seed + 1);
        let kind = PrescriptionKind::ALL[k];
        let gf = propagate(&f, &Prescription::new(kind, eps).unwrap()).unwrap().field;
        let gh = propagate(&h, &Prescription::new(kind.adjoint(), eps).unwrap()).unwrap().field;
        let lhs = gf.inner(&h).unwrap();
        let rhs = f.inner(&gh).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-8 * f.l2_norm() * h.l2_norm());
    }
}
