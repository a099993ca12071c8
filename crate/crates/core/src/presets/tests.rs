use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::structure::validate_assumption;

fn draw(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let sigma = (0..n - 1).map(|_| rng.random_range(0.2..5.0)).collect();
    let lip = (0..n - 2).map(|_| rng.random_range(0.0..3.0)).collect();
    (sigma, lip)
}

#[test]
fn row_terms_equal_diagonals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 3..9 {
        let (sigma, lip) = draw(&mut rng, n);
        for kind in PresetKind::ALL {
            let b = preset_bounds(kind, &sigma, &lip).unwrap();
            let (d, lambda) = (0.7, 1.3);
            let design = preset_matrices(kind, n, d, lambda).unwrap();
            let w = coupling_matrix(design.h(), design.g(), design.p(), design.q(), design.r(), &sigma, &lip).unwrap();
            let k = design.k().unwrap();
            let mm = design.gram();
            for i in 0..n {
                assert!((b.x[i] - w[(i, i)]).abs() < 1e-12, "{} x[{}]", kind, i);
                assert!((b.k[i] - d * k[(i, i)]).abs() < 1e-12, "{} k[{}]", kind, i);
                assert!(
                    (b.c[i] - mm[(i, i)] / (lambda * lambda)).abs() < 1e-12,
                    "{} c[{}]",
                    kind,
                    i
                );
            }
        }
    }
}

#[test]
fn homogeneous_unit_constants() {
    let ones = |len: usize| vec![1.0; len];
    let dfbr = preset_bounds(PresetKind::Dfbr, &ones(5), &ones(4)).unwrap();
    assert!((dfbr.d_bar - 0.4).abs() < 1e-15);
    let pdyr = preset_bounds(PresetKind::Pdyr, &ones(3), &ones(2)).unwrap();
    assert!((pdyr.d_bar - 4.0 / 7.0).abs() < 1e-15);
    let sdyr = preset_bounds(PresetKind::Sdyr, &ones(5), &ones(4)).unwrap();
    assert!((sdyr.d_bar - 0.8).abs() < 1e-15);
}

#[test]
fn homogeneous_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.random_range(5..12);
        let (s, l) = (rng.random_range(0.05..10.0), rng.random_range(0.0..10.0));
        let sigma = vec![s; n - 1];
        let lip = vec![l; n - 2];
        let dfbr = preset_bounds(PresetKind::Dfbr, &sigma, &lip).unwrap();
        let exact = 2.0 * s / (1.0 + 4.0 * s * l);
        assert!((dfbr.d_bar - exact).abs() <= 1e-12 * exact);
        let d = 0.6 * dfbr.d_bar;
        let cap = 1.0 - d * (1.0 + 4.0 * s * l) / (2.0 * s);
        assert!((dfbr.gamma_cap(d) - cap).abs() < 1e-12);
        let pdyr = preset_bounds(PresetKind::Pdyr, &sigma, &lip).unwrap();
        assert!(pdyr.d_bar >= 4.0 * s / (1.0 + 6.0 * s * l) * (1.0 - 1e-12));
        let sdyr = preset_bounds(PresetKind::Sdyr, &sigma, &lip).unwrap();
        assert!(sdyr.d_bar >= 4.0 * s / (1.0 + 4.0 * s * l) * (1.0 - 1e-12));
    }
}

#[test]
fn individual_constants_beat_global_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(3..9);
        let (sigma, lip) = draw(&mut rng, n);
        let s_min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
        let l_max = lip.iter().copied().fold(0.0, f64::max);
        for kind in PresetKind::ALL {
            let own = preset_bounds(kind, &sigma, &lip).unwrap();
            let global = preset_bounds(kind, &vec![s_min; n - 1], &vec![l_max; n - 2]).unwrap();
            assert!(own.d_bar >= global.d_bar * (1.0 - 1e-12));
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn largest_lipschitz_constant_belongs_at_an_end() {
    // Homogeneous σ isolates the effect of where the largest L sits.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 5..=6 {
        for _ in 0..10 {
            let lip: Vec<f64> = (0..n - 2).map(|_| rng.random_range(0.1..3.0)).collect();
            let sigma = vec![1.0; n - 1];
            for kind in [PresetKind::Dfbr, PresetKind::Sdyr] {
                let (mut best_end, mut best_inner) = (0.0_f64, 0.0_f64);
                let top = (0..n - 2).max_by(|&a, &b| lip[a].total_cmp(&lip[b])).unwrap();
                for perm in permutations(&(0..n - 2).collect::<Vec<_>>()) {
                    let permuted: Vec<f64> = perm.iter().map(|&j| lip[j]).collect();
                    let d = preset_bounds(kind, &sigma, &permuted).unwrap().d_bar;
                    let at = perm.iter().position(|&j| j == top).unwrap();
                    if at == 0 || at == n - 3 {
                        best_end = best_end.max(d);
                    } else {
                        best_inner = best_inner.max(d);
                    }
                }
                assert!(best_end >= best_inner * (1.0 - 1e-12), "{} n={}", kind, n);
            }
        }
    }
}

proptest! {
    #[test]
    fn reversal_reverses_rows(seed in 0u64..1000, n in 3usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sigma, lip) = draw(&mut rng, n);
        let rs: Vec<f64> = sigma.iter().rev().copied().collect();
        let rl: Vec<f64> = lip.iter().rev().copied().collect();
        for kind in [PresetKind::Dfbr, PresetKind::Sdyr] {
            let a = preset_bounds(kind, &sigma, &lip).unwrap();
            let b = preset_bounds(kind, &rs, &rl).unwrap();
            for i in 0..n {
                prop_assert!((a.x[i] - b.x[n - 1 - i]).abs() < 1e-12);
            }
            prop_assert!((a.d_bar - b.d_bar).abs() < 1e-12 * a.d_bar);
        }
    }

    #[test]
    fn pdyr_spokes_follow_sigma(seed in 0u64..1000, n in 4usize..9) {
        // Without Lipschitz terms each spoke row depends on one σ only, so a
        // permutation of σ permutes the spokes and fixes the hub.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (sigma, _) = draw(&mut rng, n);
        let zero = vec![0.0; n - 2];
        let perm: Vec<usize> = (0..n - 1).rev().collect();
        let permuted: Vec<f64> = perm.iter().map(|&j| sigma[j]).collect();
        let a = preset_bounds(PresetKind::Pdyr, &sigma, &zero).unwrap();
        let b = preset_bounds(PresetKind::Pdyr, &permuted, &zero).unwrap();
        prop_assert!((a.x[0] - b.x[0]).abs() < 1e-12);
        for (i, &j) in perm.iter().enumerate() {
            prop_assert!((b.x[i + 1] - a.x[j + 1]).abs() < 1e-12);
        }
    }
}

#[test]
fn bound_errors_name_the_row() {
    let sigma = vec![1.0; 5];
    let lip = vec![1.0; 4];
    match dfbr_design(&sigma, &lip, 0.5, 0.1) {
        Err(Error::Bound(msg)) => assert!(msg.contains("row 3"), "{}", msg),
        other => panic!("unexpected {:?}", other.map(|_| ())),
    }
    match dfbr_design(&sigma, &lip, 0.2, 10.0) {
        Err(Error::Bound(msg)) => assert!(msg.contains("λ²d"), "{}", msg),
        other => panic!("unexpected {:?}", other.map(|_| ())),
    }
    assert!(matches!(
        preset_bounds(PresetKind::Dfbr, &[1.0], &[]),
        Err(Error::Shape(_))
    ));
    assert!(matches!(
        preset_bounds(PresetKind::Dfbr, &[1.0, 1.0], &[]),
        Err(Error::Shape(_))
    ));
}

#[test]
fn certified_parameters_pass_certification() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [3, 5, 8] {
        for _ in 0..5 {
            let (sigma, lip) = draw(&mut rng, n);
            for kind in PresetKind::ALL {
                let (design, d, _) = certified_preset(kind, &sigma, &lip).unwrap();
                let cert = validate_assumption(&design, &sigma, &lip).unwrap();
                assert!(cert.passed(), "{} n={} d={}\n{}", kind, n, d, cert);
                assert!(cert.psd.margin > 0.0);
            }
        }
    }
}

#[test]
fn certified_limit_is_the_psd_boundary() {
    let sigma = vec![1.0, 0.5, 2.0, 1.0];
    let lip = vec![0.5, 2.0, 1.0];
    for kind in PresetKind::ALL {
        let rows = preset_bounds(kind, &sigma, &lip).unwrap();
        let cert = certified_bounds(kind, &sigma, &lip).unwrap();
        // Full-matrix PSD implies its diagonal conditions.
        assert!(cert.d_bar <= rows.d_bar * (1.0 + 1e-12));
        let lam = 1e-4;
        let below = preset_matrices(kind, 5, 0.99 * cert.d_bar, lam).unwrap();
        let above = preset_matrices(kind, 5, 1.01 * cert.d_bar, lam).unwrap();
        assert!(validate_assumption(&below, &sigma, &lip).unwrap().psd.passed);
        assert!(!validate_assumption(&above, &sigma, &lip).unwrap().psd.passed);
    }
}

#[test]
fn margin_shrinks_toward_the_limit() {
    let sigma = vec![2.0, 1.0, 0.5, 1.5, 1.0];
    let lip = vec![0.3, 1.0, 0.2, 0.8];
    for kind in PresetKind::ALL {
        let cert = certified_bounds(kind, &sigma, &lip).unwrap();
        let margins: Vec<f64> = [0.5, 0.9, 0.99]
            .iter()
            .map(|t| {
                let d = t * cert.d_bar;
                let lambda = cert.lambda_sq_max(d).unwrap().sqrt() * 0.5;
                let design = preset_matrices(kind, 6, d, lambda).unwrap();
                validate_assumption(&design, &sigma, &lip).unwrap().psd.margin
            })
            .collect();
        assert!(margins.windows(2).all(|w| w[1] < w[0]), "{} {:?}", kind, margins);
        assert!(margins[2] > 0.0);
    }
}

#[test]
fn crfb_toy_is_certified() {
    let patterns = PatternSet::default_for(3, 2, 1).unwrap();
    let sigma = [1.0, 0.5];
    let lip = [2.0];
    let crfb = crfb_design(&patterns, &sigma, &lip, &SelectionOptions::default()).unwrap();
    let cert = validate_assumption(&crfb.design, &sigma, &lip).unwrap();
    assert!(cert.passed(), "{}", cert);
    let lap = crfb.design.laplacian().unwrap();
    assert!(lap.row_sums().iter().all(|s| s.abs() < 1e-15));
    assert_eq!(lap[(0, 1)], lap[(1, 2)]);
}

#[test]
fn preset_names_roundtrip() {
    for kind in PresetKind::ALL {
        assert_eq!(kind.name().parse::<PresetKind>().unwrap(), kind);
    }
    assert!("ring".parse::<PresetKind>().is_err());
}

#[test]
fn coupling_scaled_crfb_is_certified() {
    let (sigma, lip) = (vec![0.001, 0.002, 0.0005], vec![3.0, 5.0]);
    let opts = SelectionOptions {
        iters: 500,
        ..SelectionOptions::default()
    };
    let crfb = crfb_default_scaled(4, &sigma, &lip, &opts, LaplacianScale::Coupling).unwrap();
    assert!(validate_assumption(&crfb.design, &sigma, &lip).unwrap().passed());
    let w = coupling_matrix(
        crfb.design.h(),
        crfb.design.g(),
        crfb.design.p(),
        crfb.design.q(),
        crfb.design.r(),
        &sigma,
        &lip,
    )
    .unwrap();
    let lap_norm = crate::blockspace::spectral_norm(crfb.design.laplacian().unwrap()).value;
    let w_norm = crate::blockspace::spectral_norm(&w).value;
    assert!((lap_norm - w_norm).abs() < 1e-8 * w_norm);
}
