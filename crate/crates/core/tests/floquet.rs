use num_complex::Complex;
use otoc_core::floquet::*;
use otoc_core::schedule::{build_schedule, Boundary, Geometry};
use proptest::prelude::*;
use rand::SeedableRng;

type C = Complex<f64>;

fn pauli(k: usize) -> [[C; 2]; 2] {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

fn scale(g: &Gate2<f64>, s: C) -> Gate2<f64> {
    g.map(|row| row.map(|x| x * s))
}

fn add(a: &Gate2<f64>, b: &Gate2<f64>) -> Gate2<f64> {
    let mut out = *a;
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] += b[r][c];
        }
    }
    out
}

/// Taylor series of `exp(M)`.
fn expm(m: &Gate2<f64>) -> Gate2<f64> {
    let mut id = [[C::new(0.0, 0.0); 4]; 4];
    (0..4).for_each(|i| id[i][i] = C::new(1.0, 0.0));
    let (mut sum, mut term) = (id, id);
    for k in 1..60 {
        term = scale(&matmul(&term, m), C::new(1.0 / k as f64, 0.0));
        sum = add(&sum, &term);
    }
    sum
}

fn max_diff(a: &Gate2<f64>, b: &Gate2<f64>) -> f64 {
    let mut w = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            w = w.max((a[r][c] - b[r][c]).norm());
        }
    }
    w
}

#[test]
fn entangler_matches_exponential() {
    for a_z in [0.0, 0.3, 0.5, 1.0, -0.7] {
        let h = [1, 2, 3].iter().fold([[C::new(0.0, 0.0); 4]; 4], |acc, &k| {
            let w = if k == 3 { a_z } else { 1.0 };
            add(&acc, &scale(&kron(&pauli(k), &pauli(k)), C::new(w, 0.0)))
        });
        let want = expm(&scale(&h, C::new(0.0, -std::f64::consts::FRAC_PI_4)));
        assert!(max_diff(&entangler(a_z), &want) < 1e-12, "a_z {a_z}");
    }
}

#[test]
fn single_site_matches_exponential() {
    for phi in [0.0f64, 0.6, 2.0] {
        let mut m = [[C::new(0.0, 0.0); 4]; 4];
        // embed the 2x2 generator in the upper block of a 4x4 to reuse expm
        let x = pauli(1);
        let z = pauli(3);
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = C::new(0.0, 1.0) * (x[r][c] * phi.sin() + z[r][c] * phi.cos());
            }
        }
        let e = expm(&m);
        let u = single_site_u::<f64>(phi);
        for r in 0..2 {
            for c in 0..2 {
                assert!((e[r][c] - u[r][c]).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn swap_point() {
    // XX + YY + ZZ = 2 SWAP - 1
    let g = entangler::<f64>(1.0);
    let ph = C::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let (o, z) = (ph, C::new(0.0, 0.0));
    let want = [[o, z, z, z], [z, z, o, z], [z, o, z, z], [z, z, z, o]];
    assert!(max_diff(&g, &want) < 1e-14);
}

#[test]
fn phi_zero_commutes_with_zz() {
    let g = floquet_gate::<f64>(0.37, 0.0);
    let zz = kron(&pauli(3), &pauli(3));
    assert!(max_diff(&matmul(&g, &zz), &matmul(&zz, &g)) < 1e-14);
    let g = floquet_gate::<f64>(0.37, 0.6);
    assert!(max_diff(&matmul(&g, &zz), &matmul(&zz, &g)) > 1e-3);
}

#[test]
fn f32_gate_is_unitary() {
    assert!(unitarity_defect(&floquet_gate::<f32>(0.5, 0.6)) < 1e-6);
}

proptest! {
    #[test]
    fn gate_is_unitary(a_z in -2.0f64..2.0, phi in 0.0f64..6.3) {
        prop_assert!(unitarity_defect(&floquet_gate::<f64>(a_z, phi)) <= 1e-12);
    }
}

/// Dense `2^L x 2^L` matrix of one gate on `(l, r)`, bit `i` = site `i`.
fn embed(len: usize, l: usize, r: usize, g: &Gate2<f64>) -> Vec<Vec<C>> {
    let n = 1 << len;
    let mut m = vec![vec![C::new(0.0, 0.0); n]; n];
    for col in 0..n {
        let (a, b) = ((col >> l) & 1, (col >> r) & 1);
        let base = col & !(1 << l) & !(1 << r);
        for a2 in 0..2 {
            for b2 in 0..2 {
                let row = base | (a2 << l) | (b2 << r);
                m[row][col] += g[2 * a2 + b2][2 * a + b];
            }
        }
    }
    m
}

fn mat_mul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    let mut out = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == C::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].conj()).collect()).collect()
}

fn z_matrix(len: usize, site: usize) -> Vec<Vec<C>> {
    let n = 1 << len;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i != j { C::new(0.0, 0.0) } else if (i >> site) & 1 == 1 { C::new(-1.0, 0.0) } else { C::new(1.0, 0.0) })
                .collect()
        })
        .collect()
}

#[test]
fn apply_two_matches_dense_matrix() {
    let len = 5;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let psi = PureState::<f64>::random(len, &mut rng).unwrap();
    let g = floquet_gate_sites::<f64>(0.3, 0.2, 1.1);
    for (l, r) in [(0, 1), (2, 3), (4, 0), (3, 4)] {
        let mut s = psi.clone();
        s.apply_two(l, r, &g);
        let m = embed(len, l, r, &g);
        for (i, row) in m.iter().enumerate() {
            let want = row.iter().zip(psi.amplitudes()).fold(C::new(0.0, 0.0), |a, (x, y)| a + x * y);
            assert!((s.amplitudes()[i] - want).norm() < 1e-14);
        }
    }
}

/// `Tr(V A V A) / 2^L` with `A = U^{-t} W U^t`, by full matrices.
fn matrix_otoc(len: usize, bc: Boundary, a_z: f64, phi: f64, x_v: usize, x_w: usize, t: usize) -> f64 {
    let sched = build_schedule(Geometry::Brickwork, bc, len, t.max(1)).unwrap();
    let n = 1 << len;
    let mut u: Vec<Vec<C>> = z_matrix(len, 0).iter().map(|r| r.iter().map(|x| x * x).collect()).collect();
    for layer in sched.layers().iter().take(t) {
        for b in layer {
            u = mat_mul(&embed(len, b.left, b.right, &floquet_gate(a_z, phi)), &u);
        }
    }
    let a = mat_mul(&dagger(&u), &mat_mul(&z_matrix(len, x_w), &u));
    let v = z_matrix(len, x_v);
    let p = mat_mul(&v, &mat_mul(&a, &mat_mul(&v, &a)));
    (0..n).map(|i| p[i][i].re).sum::<f64>() / n as f64
}

#[test]
fn basis_trace_matches_matrix_oracle() {
    let (len, layers) = (6, 7);
    for bc in [Boundary::Open, Boundary::Periodic] {
        let circuit = FloquetCircuit::<f64>::new(len, bc, 0.5, &[0.6; 6]).unwrap();
        let mut trace = vec![0.0; layers + 1];
        for i in 0..1 << len {
            let psi = PureState::basis(len, i).unwrap();
            for (acc, v) in trace.iter_mut().zip(state_otoc(&circuit, &psi, 0, 2, layers).unwrap()) {
                *acc += v.re / (1 << len) as f64;
            }
        }
        for (t, &v) in trace.iter().enumerate() {
            let want = matrix_otoc(len, bc, 0.5, 0.6, 0, 2, t);
            assert!((v - want).abs() < 1e-12, "{bc:?} t {t}: {v} vs {want}");
        }
    }
}

#[test]
fn typicality_tracks_exact_trace() {
    let (len, layers) = (10, 12);
    let circuit = FloquetCircuit::<f64>::new(len, Boundary::Open, 0.5, &[0.6; 10]).unwrap();
    let mut exact = vec![0.0; layers + 1];
    for i in 0..1 << len {
        let psi = PureState::basis(len, i).unwrap();
        for (acc, v) in exact.iter_mut().zip(state_otoc(&circuit, &psi, 0, 1, layers).unwrap()) {
            *acc += v.re / (1 << len) as f64;
        }
    }
    let mut p = FloquetParams::clean(0.5, 0.6, len, layers);
    p.n_typ = 16;
    p.seed = 11;
    let s = otoc_typicality(&p).unwrap();
    let tol = 5.0 * s.noise_level(len);
    for (pt, want) in s.points.iter().zip(&exact) {
        assert!((pt.otoc.re - want).abs() < tol, "t {}: {} vs {want}", pt.t, pt.otoc.re);
    }
}

#[test]
fn otoc_starts_at_one() {
    for (x_v, x_w) in [(0, 1), (0, 5), (3, 7)] {
        let mut p = FloquetParams::clean(0.5, 0.6, 10, 0);
        p.x_v = x_v;
        p.x_w = x_w;
        let s = otoc_typicality(&p).unwrap();
        assert_eq!(s.points[0].otoc, Complex::new(1.0, 0.0));
    }
}

#[test]
fn saturation_values() {
    assert!((saturation(1) + 1.0 / 3.0).abs() < 1e-16);
    assert!((saturation(18) + 1.0 / (4f64.powi(18) - 1.0)).abs() < 1e-40);
}

#[test]
fn late_times_approach_saturation() {
    // the fully scrambled trace sits at the Haar value up to O(2^-L) fluctuations
    let (len, layers) = (6, 60);
    let phis = [0.3, 1.9, 4.0, 2.2, 5.1, 0.8];
    let circuit = FloquetCircuit::<f64>::new(len, Boundary::Open, 0.5, &phis).unwrap();
    let mut trace = vec![0.0; layers + 1];
    for i in 0..1 << len {
        let psi = PureState::basis(len, i).unwrap();
        for (acc, v) in trace.iter_mut().zip(state_otoc(&circuit, &psi, 0, 1, layers).unwrap()) {
            *acc += v.re / (1 << len) as f64;
        }
    }
    let late: f64 = trace[30..].iter().sum::<f64>() / (layers - 29) as f64;
    assert!((late - saturation(len)).abs() < 0.02, "{late}");
}

#[test]
fn norm_is_conserved() {
    let len = 10;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut psi = PureState::<f64>::random(len, &mut rng).unwrap();
    let circuit = FloquetCircuit::<f64>::new(len, Boundary::Periodic, 0.4, &[0.6; 10]).unwrap();
    // 1000 gate applications
    for k in 0..200 {
        circuit.forward(&mut psi, k);
    }
    assert!((psi.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn runs_are_deterministic() {
    let mut p = FloquetParams::clean(0.5, 0.6, 8, 10);
    p.phi_mode = PhiMode::Site;
    p.n_samples = 3;
    p.seed = 42;
    let a = disorder_average(&p).unwrap();
    let b = disorder_average(&p).unwrap();
    assert_eq!(a, b);
    p.seed = 43;
    assert_ne!(a.points, disorder_average(&p).unwrap().points);
}

#[test]
fn single_homogeneous_sample_is_a_clean_run() {
    let mut p = FloquetParams::clean(0.5, 0.0, 8, 10);
    p.phi_mode = PhiMode::Homogeneous;
    p.seed = 9;
    let s = disorder_average(&p).unwrap();
    let phi = s.sample_phis[0][0];
    assert!(s.sample_phis[0].iter().all(|&x| x == phi));
    let circuit = FloquetCircuit::<f64>::new(8, Boundary::Open, 0.5, &[phi; 8]).unwrap();
    let mut rng = sample_rng(9, 0);
    let _: f64 = rand::Rng::random(&mut rng);
    let psi = PureState::random(8, &mut rng).unwrap();
    let want = state_otoc(&circuit, &psi, 0, 1, 10).unwrap();
    for (pt, w) in s.points.iter().zip(want) {
        assert_eq!(pt.otoc, w);
    }
}

#[test]
fn site_mode_draws_distinct_angles() {
    let mut p = FloquetParams::clean(0.5, 0.0, 8, 2);
    p.phi_mode = PhiMode::Site;
    let s = disorder_average(&p).unwrap();
    let phis = &s.sample_phis[0];
    assert!(phis.iter().all(|&x| (0.0..std::f64::consts::TAU).contains(&x)));
    assert!(phis.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn invalid_params_are_rejected() {
    let mut p = FloquetParams::clean(0.5, 0.6, 30, 4);
    assert!(otoc_typicality(&p).is_err());
    p.len = 8;
    p.n_typ = 0;
    assert!(otoc_typicality(&p).is_err());
    p.n_typ = 1;
    p.x_w = 8;
    assert!(otoc_typicality(&p).is_err());
}

#[test]
fn first_stage_fit_needs_points() {
    let p = FloquetParams::clean(0.5, 0.6, 8, 6);
    let s = otoc_typicality(&p).unwrap();
    assert!(matches!(first_stage_fit(&s, &p), Err(otoc_core::Error::FitInsufficient { .. })));

    // a long run whose signal drops into the noise early cannot be rescued by T
    let mut p = FloquetParams::clean(0.5, 0.6, 8, 20);
    p.phi_mode = PhiMode::Site;
    p.n_samples = 2;
    let s = disorder_average(&p).unwrap();
    assert!(matches!(first_stage_fit(&s, &p), Err(otoc_core::Error::FitBelowNoise { .. })));
}
