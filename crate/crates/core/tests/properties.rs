//! Invariants of the modem, channel, transceiver and analysis layers.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qssm::analysis::{eta_bar, EtaCase};
use qssm::channel::{array_response, inner, sample_channel, AngleMode, ArrayGeometry};
use qssm::modem::{
    bits_to_index, hamming_distance, index_to_bits, label_distance, Constellation, ConstellationKind, SymbolBook,
};
use qssm::transceiver::{
    ml_detect_ideal, ml_detect_physical, qssm_observe_ideal_with_noise, qssm_observe_physical_with_noise,
};
use qssm::Complex64;

fn constellation_spec() -> impl Strategy<Value = (ConstellationKind, usize)> {
    prop_oneof![
        (1u32..=6).prop_map(|b| (ConstellationKind::Psk, 1usize << b)),
        (2u32..=6).prop_map(|b| (ConstellationKind::Qam, 1usize << b)),
    ]
}

fn geometry() -> impl Strategy<Value = ArrayGeometry> {
    (prop::sample::select(vec![8usize, 16, 32, 64]), prop::sample::select(vec![0.5, 1.0]))
        .prop_map(|(elements, spacing)| ArrayGeometry { elements, spacing })
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

proptest! {
    #[test]
    fn unit_average_energy((kind, order) in constellation_spec()) {
        let c = Constellation::<f64>::new(kind, order).unwrap();
        prop_assert!((c.average_energy() - 1.0).abs() < 1e-12);
        prop_assert_eq!(c.points().len(), order);
        for (i, p) in c.points().iter().enumerate() {
            prop_assert_eq!(c.find(*p), Some(i));
        }
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit((kind, order) in constellation_spec()) {
        let c = Constellation::<f64>::new(kind, order).unwrap();
        let pts = c.points();
        let mut dmin = f64::INFINITY;
        for i in 0..order {
            for j in 0..i {
                dmin = dmin.min((pts[i] - pts[j]).norm());
            }
        }
        for i in 0..order {
            for j in 0..i {
                if (pts[i] - pts[j]).norm() < dmin * (1.0 + 1e-9) {
                    prop_assert_eq!(label_distance(i, j), 1, "points {} and {}", i, j);
                }
            }
        }
    }

    #[test]
    fn bit_mapping_roundtrips(paths_log in 0u32..=3, (kind, order) in constellation_spec(), seed: u64) {
        let book = SymbolBook::<f64>::build(1 << paths_log, kind, order).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let label = rand::Rng::random_range(&mut rng, 0..book.len());
        let bits = index_to_bits(label, book.bits_per_symbol());
        let s = book.map_bits(&bits).unwrap();
        prop_assert_eq!(s.label, label);
        prop_assert_eq!(book.demap_symbol(s).unwrap(), bits.clone());
        prop_assert_eq!(bits_to_index(&bits, book.bits_per_symbol()).unwrap(), label);
        prop_assert!(s.k1 >= 1 && s.k1 <= book.paths() && s.k2 >= 1 && s.k2 <= book.paths());
    }

    #[test]
    fn hamming_is_a_metric(a in 0usize..256, b in 0usize..256, c in 0usize..256) {
        let (x, y, z) = (index_to_bits(a, 8), index_to_bits(b, 8), index_to_bits(c, 8));
        let d = |p: &[u8], q: &[u8]| hamming_distance(p, q).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert_eq!(d(&x, &y) == 0, a == b);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z));
        prop_assert_eq!(d(&x, &y) as u32, label_distance(a, b));
    }

    #[test]
    fn steering_vectors_have_unit_norm(g in geometry(), theta in 0.0f64..std::f64::consts::TAU) {
        let a = array_response(&g, theta);
        prop_assert_eq!(a.len(), g.elements);
        prop_assert!((inner(&a, &a).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_channels_are_orthogonal(g in geometry(), paths in 2usize..=8, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channel::<f64, _>(paths, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        prop_assert!(ch.orthogonality_defect().unwrap() < 1e-9);
        for l in 0..paths {
            prop_assert!((ch.effective_gain(l) - ch.gains()[l]).norm() < 1e-9);
        }
    }

    #[test]
    fn separated_angles_respect_resolution(g in geometry(), paths in 2usize..=6, seed: u64) {
        // greedy rejection sampling needs some slack beyond bare feasibility
        prop_assume!(paths as f64 * g.sine_resolution() <= 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channel::<f64, _>(paths, &g, &g, AngleMode::MinSeparation, &mut rng).unwrap();
        for angles in [ch.aod(), ch.aoa()] {
            for i in 0..paths {
                prop_assert!((0.0..std::f64::consts::TAU).contains(&angles[i]));
                for j in 0..i {
                    prop_assert!((angles[i].sin() - angles[j].sin()).abs() >= g.sine_resolution() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_ideal_detection_recovers_every_symbol(
        paths_log in 0u32..=2,
        (kind, order) in constellation_spec(),
        snr_db in 0.0f64..40.0,
        seed: u64,
    ) {
        let book = SymbolBook::<f64>::build(1 << paths_log, kind, order).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = qssm::channel::sample_gains::<f64, _>(book.paths(), &mut rng);
        let snr = 10f64.powf(snr_db / 10.0);
        for s in book.symbols() {
            let obs = qssm_observe_ideal_with_noise(s, &gains, snr, zero()).unwrap();
            let d = ml_detect_ideal(&obs, &gains, &book).unwrap();
            prop_assert_eq!(d.metric, 0.0);
            prop_assert_eq!(d.point, s.point);
            // an index whose component is zero is invisible; ties go to the lowest label
            prop_assert!(d.label <= s.label);
            if s.x_re != 0.0 || gains.len() == 1 {
                prop_assert_eq!(d.k1_hat, s.k1);
            }
            if s.x_im != 0.0 || gains.len() == 1 {
                prop_assert_eq!(d.k2_hat, s.k2);
            }
            if s.x_re != 0.0 && s.x_im != 0.0 {
                prop_assert_eq!(d.label, s.label);
            }
        }
    }

    #[test]
    fn noiseless_physical_detection_recovers_every_symbol(paths_log in 1u32..=3, order_log in 1u32..=4, seed: u64) {
        let book = SymbolBook::<f64>::build(1 << paths_log, ConstellationKind::Qam, 2usize << order_log).unwrap();
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = sample_channel::<f64, _>(book.paths(), &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        let noise = vec![zero(); g.elements];
        for s in book.symbols() {
            let obs = qssm_observe_physical_with_noise(s, &ch, 100.0, &noise).unwrap();
            let d = ml_detect_physical(&obs, &ch, &book).unwrap();
            prop_assert_eq!(d.label, s.label);
            prop_assert!(d.metric < 1e-18);
        }
    }

    #[test]
    fn eta_bar_case_table(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0,
        same1: bool, same2: bool,
    ) {
        let (x, xh) = (Complex64::new(a, b), Complex64::new(c, d));
        let e = eta_bar(x, xh, same1, same2);
        let expected = match e.case {
            EtaCase::SameSame => (a - c).powi(2) + (b - d).powi(2),
            EtaCase::DiffSame => a * a + c * c + (b - d).powi(2),
            EtaCase::SameDiff => (a - c).powi(2) + b * b + d * d,
            EtaCase::DiffDiff => a * a + b * b + c * c + d * d,
        };
        prop_assert_eq!(e.case == EtaCase::SameSame, same1 && same2);
        prop_assert_eq!(e.case == EtaCase::DiffDiff, !same1 && !same2);
        prop_assert!((e.value - expected).abs() < 1e-12);
        prop_assert!((e.value - eta_bar(xh, x, same1, same2).value).abs() < 1e-12);
        prop_assert!(e.value >= 0.0);
    }
}

/// `√η` built from independent `CN(0, 1)` gains for each index pattern has
/// variance `η̄` and an exponential `|√η|²`.
#[test]
fn sqrt_eta_is_complex_gaussian_with_variance_eta_bar() {
    use qssm::channel::complex_gaussian;
    let x = Complex64::new(3.0, -1.0) / 10f64.sqrt();
    let xh = Complex64::new(-1.0, 1.0) / 10f64.sqrt();
    let draws = 1_000_000;
    for (same1, same2) in [(true, true), (false, true), (true, false), (false, false)] {
        let expected = eta_bar(x, xh, same1, same2).value;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (mut sum_re, mut sum_im, mut sum_sq, mut above) = (0.0, 0.0, 0.0, 0u64);
        for _ in 0..draws {
            // scatterers 0 and 1 carry the transmitted symbol; 2 and 3 the competitor
            let b: [Complex64; 4] = std::array::from_fn(|_| complex_gaussian(&mut rng));
            let k1_hat = if same1 { b[0] } else { b[2] };
            let k2_hat = if same2 { b[1] } else { b[3] };
            let v = (b[0] * x.re - k1_hat * xh.re) + Complex64::i() * (b[1] * x.im - k2_hat * xh.im);
            sum_re += v.re;
            sum_im += v.im;
            sum_sq += v.norm_sqr();
            if v.norm_sqr() > expected {
                above += 1;
            }
        }
        let n = draws as f64;
        let var = sum_sq / n;
        assert!((var / expected - 1.0).abs() < 0.01, "case ({same1}, {same2}): {var} vs {expected}");
        assert!((sum_re / n).abs() < 0.01 && (sum_im / n).abs() < 0.01);
        // P(|√η|² > η̄) = e^{-1} for an exponential with mean η̄
        assert!((above as f64 / n - (-1f64).exp()).abs() < 0.003);
    }
}

#[test]
fn path_gain_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let gains = qssm::channel::sample_gains::<f64, _>(1_000_000, &mut rng);
    let n = gains.len() as f64;
    let mean_re = gains.iter().map(|g| g.re).sum::<f64>() / n;
    let mean_im = gains.iter().map(|g| g.im).sum::<f64>() / n;
    let var_re = gains.iter().map(|g| (g.re - mean_re).powi(2)).sum::<f64>() / n;
    let var_im = gains.iter().map(|g| (g.im - mean_im).powi(2)).sum::<f64>() / n;
    assert!(mean_re.abs() < 0.01 && mean_im.abs() < 0.01);
    assert!((var_re - 0.5).abs() < 0.01 && (var_im - 0.5).abs() < 0.01);
}
