use orlicz_unfold::cells::AxisBox;
use orlicz_unfold::{
    cell_index, complementary, decompose, dual_pairing, luxemburg_norm, modular_value, unfold, Domain, Grid, NFunction,
    ProductFunction, ReferenceCell, SampledFunction,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

fn builtin() -> Vec<NFunction> {
    vec![NFunction::Power(1.5), NFunction::Power(2.0), NFunction::Power(3.0), NFunction::PowerLog(2.0), NFunction::Exp]
}

/// A box-union domain whose corners sit on the lattice `h Z^d`, with
/// `h = eps / m` and `eps = 1 / k`.
#[derive(Debug, Clone)]
struct Setup {
    domain: Domain,
    eps: f64,
    m: usize,
    values: Vec<f64>,
}

impl Setup {
    fn h(&self) -> f64 {
        self.eps / self.m as f64
    }

    fn grid(&self) -> Grid {
        Grid::uniform(self.domain.clone(), self.h()).unwrap()
    }

    fn function(&self) -> SampledFunction {
        let grid = self.grid();
        let n = grid.len();
        SampledFunction::new(grid, self.values.iter().cycle().take(n).copied().collect()).unwrap()
    }
}

fn setup() -> impl Strategy<Value = Setup> {
    (1usize..=2, 2usize..=5, 2usize..=4, 1usize..=2, any::<u64>()).prop_map(|(d, k, m, nboxes, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = 1.0 / k as f64;
        let h = eps / m as f64;
        // boxes side by side along axis 0 with a lattice-aligned gap
        let mut boxes = Vec::new();
        let mut cursor = 0i64;
        for _ in 0..nboxes {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for a in 0..d {
                let start = if a == 0 { cursor + rng.gen_range(0..3) } else { rng.gen_range(-2..3) };
                let len = rng.gen_range(1..(3 * m as i64 + 2));
                lo.push(start as f64 * h);
                hi.push((start + len) as f64 * h);
                if a == 0 {
                    cursor = start + len;
                }
            }
            boxes.push(AxisBox::new(lo, hi).unwrap());
        }
        let domain = Domain::new(boxes).unwrap();
        let values = (0..64).map(|_| rng.gen_range(-3.0..3.0)).collect();
        Setup { domain, eps, m, values }
    })
}

#[test]
fn cell_index_reconstructs_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1_000_000 {
        let d = rng.gen_range(1..=3);
        let edges: Vec<f64> = (0..d).map(|_| rng.gen_range(0.25..2.0)).collect();
        let cell = ReferenceCell::new(edges.clone()).unwrap();
        let eps = 10f64.powf(rng.gen_range(-3.0..0.0));
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let scaled: Vec<f64> = z.iter().map(|c| c / eps).collect();
        let (int, frac) = cell_index(&scaled, &cell).unwrap();
        for a in 0..d {
            assert!(frac[a] >= 0.0 && frac[a] < edges[a]);
            let back = eps * (int[a] as f64 * edges[a] + frac[a]);
            let ulp = f64::EPSILON * z[a].abs().max(eps);
            assert!((back - z[a]).abs() <= 4.0 * ulp, "z {} eps {eps} edge {}: {back}", z[a], edges[a]);
        }
    }
}

#[test]
fn hoelder_tight_witness() {
    let grid = Grid::uniform(Domain::unit_cube(1), 1.0 / 32.0).unwrap();
    let one = SampledFunction::constant(grid, 1.0);
    let b = NFunction::Power(2.0);
    let conj = complementary(&b, 1e3, 4000).unwrap();
    let nu = luxemburg_norm(&one, &b, 1e-13).unwrap();
    let nv = luxemburg_norm(&one, &conj, 1e-13).unwrap();
    assert!((nu - 1.0).abs() < 1e-12);
    assert!((nv - 0.5).abs() < 1e-8);
    let pairing = dual_pairing(&one, &one).unwrap();
    assert!((pairing - 2.0 * nu * nv).abs() <= 1e-8 * pairing);
}

#[test]
fn lambda_vanishes_on_exact_tilings() {
    for k in 1..=5 {
        for (a, b) in [(1, 1), (2, 3), (4, 1)] {
            let eps = 1.0 / (2 * k) as f64;
            let omega = Domain::single(vec![0.0, eps], vec![a as f64 * eps, (b + 1) as f64 * eps]).unwrap();
            let dec = decompose(&omega, eps, &ReferenceCell::unit(2)).unwrap();
            assert_eq!(dec.lambda_measure(), 0.0);
            assert_eq!(dec.xi_set().len(), a * b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hoelder_inequality(s in setup(), shift in -2.0f64..2.0, which in 0usize..5) {
        let b = &builtin()[which];
        let conj = complementary(b, 50.0, 800).unwrap();
        let u = s.function();
        let v = u.map(|x| (x + shift).sin() * 2.0);
        let nu = luxemburg_norm(&u, b, 1e-12).unwrap();
        let nv = luxemburg_norm(&v, &conj, 1e-12).unwrap();
        let pairing = dual_pairing(&u, &v).unwrap();
        prop_assert!(pairing.abs() <= 2.0 * nu * nv * (1.0 + 1e-9));
    }

    #[test]
    fn young_inequality(s in 0.0f64..40.0, t in 0.0f64..4.0, which in 0usize..5) {
        let b = &builtin()[which];
        let conj = complementary(b, 200.0, 1000).unwrap();
        prop_assert!(s * t <= (b.value(t) + conj.value(s)) * (1.0 + 1e-8) + 1e-300);
    }

    #[test]
    fn norm_is_homogeneous(s in setup(), c in -50.0f64..50.0, which in 0usize..5) {
        prop_assume!(c.abs() > 1e-3);
        let b = &builtin()[which];
        let tol = 1e-11;
        let u = s.function();
        let n = luxemburg_norm(&u, b, tol).unwrap();
        let nc = luxemburg_norm(&u.map(|x| c * x), b, tol).unwrap();
        prop_assert!((nc - c.abs() * n).abs() <= 2.0 * tol * nc.max(c.abs() * n) * 1.0001);
    }

    #[test]
    fn norm_is_monotone_in_the_domain(s in setup(), which in 0usize..5) {
        let b = &builtin()[which];
        let u = s.function();
        let small = luxemburg_norm(&u, b, 1e-12).unwrap();
        // add a disjoint box to the right and extend u by arbitrary values
        let mut boxes = s.domain.boxes().to_vec();
        let right = boxes.iter().map(|bx| bx.hi[0]).fold(f64::NEG_INFINITY, f64::max);
        let mut lo = boxes[0].lo.clone();
        let mut hi = boxes[0].hi.clone();
        lo[0] = right + 2.0 * s.h();
        hi[0] = lo[0] + 3.0 * s.h();
        boxes.push(AxisBox::new(lo, hi).unwrap());
        let big_grid = Grid::uniform(Domain::new(boxes).unwrap(), s.h()).unwrap();
        let mut values = u.values().to_vec();
        values.resize(big_grid.len(), 0.7);
        let big = luxemburg_norm(&SampledFunction::new(big_grid, values).unwrap(), b, 1e-12).unwrap();
        prop_assert!(big >= small);
    }

    #[test]
    fn unfolding_is_linear(s in setup(), a in -3.0f64..3.0, c in -3.0f64..3.0) {
        let u = s.function();
        let v = u.map(|x| x * x - 1.0);
        let dec = decompose(&s.domain, s.eps, &ReferenceCell::unit(s.domain.dim())).unwrap();
        let lhs = unfold(&u.zip_with(&v, |x, y| a * x + c * y).unwrap(), &dec).unwrap();
        let tu = unfold(&u, &dec).unwrap();
        let tv = unfold(&v, &dec).unwrap();
        let rhs = tu.zip_with(&tv, |x, y| a * x + c * y).unwrap();
        prop_assert_eq!(lhs.values(), rhs.values());
    }

    #[test]
    fn unfolded_modular_identities(s in setup(), which in 0usize..5) {
        let b = &builtin()[which];
        let u = s.function();
        let dim = s.domain.dim();
        let cell = ReferenceCell::unit(dim);
        let dec = decompose(&s.domain, s.eps, &cell).unwrap();
        let tu = unfold(&u, &dec).unwrap();
        let lambda = dec.hat_mask(u.grid()).unwrap().iter().map(|h| !h).collect::<Vec<_>>();

        let unfolded = tu.map(|x| b.value(x.abs())).integral();
        let full = modular_value(&u, b, 1.0).unwrap().value;
        let on_lambda = modular_value(&u.masked(&lambda).unwrap(), b, 1.0).unwrap().value;
        let scale = TOL * (1.0 + full);
        prop_assert!(unfolded <= full + scale, "contraction: {} > {}", unfolded, full);
        prop_assert!((unfolded - full).abs() <= on_lambda + scale, "defect: {} vs {}", (unfolded - full).abs(), on_lambda);
        prop_assert!((full - on_lambda - unfolded).abs() <= scale);

        let tn = tu.luxemburg(b, 1e-12).unwrap();
        let n = luxemburg_norm(&u, b, 1e-12).unwrap();
        prop_assert!(tn <= 2.0 * n);
    }

    #[test]
    fn cell_mean_does_not_raise_the_norm(s in setup(), ny in 1usize..6, which in 0usize..5) {
        let b = &builtin()[which];
        let grid = s.grid();
        let dim = grid.dim();
        let nodes = vec![ny; dim];
        let mut rng = ChaCha8Rng::seed_from_u64(s.values.len() as u64 + ny as u64);
        let w = ProductFunction::from_fn(&grid, &ReferenceCell::unit(dim), &nodes, |x, y| {
            x[0].cos() * (3.0 * y[0]).sin() + rng.gen_range(-1.0..1.0)
        })
        .unwrap();
        let mean = luxemburg_norm(&w.mean_y(), b, 1e-12).unwrap();
        let full = w.luxemburg(b, 1e-12).unwrap();
        prop_assert!(mean <= full * (1.0 + 1e-10), "{} > {}", mean, full);
    }

    #[test]
    fn remainder_is_a_boundary_layer(s in setup()) {
        let dim = s.domain.dim();
        let cell = ReferenceCell::unit(dim);
        let dec = decompose(&s.domain, s.eps, &cell).unwrap();
        let grid = s.grid();
        let hat = dec.hat_mask(&grid).unwrap();
        let vol = grid.cell_volume();
        let inner = hat.iter().filter(|&&h| h).count() as f64 * vol;
        let omega = s.domain.measure();
        prop_assert!((inner + dec.lambda_measure() - omega).abs() <= 1e-9 * omega);
        prop_assert!(dec.lambda_measure() >= 0.0 && dec.lambda_measure() <= omega);

        let reach = s.eps * cell.diameter();
        let mut layer = 0.0;
        for (x, _) in grid.points().iter().zip(&hat) {
            let dist = s
                .domain
                .boxes()
                .iter()
                .map(|b| b.boundary_distance(x))
                .fold(f64::NEG_INFINITY, f64::max);
            if dist <= reach * (1.0 + 1e-9) {
                layer += vol;
            }
        }
        prop_assert!(dec.lambda_measure() <= layer + 1e-9 * omega, "{} > {}", dec.lambda_measure(), layer);
        // Samples outside every inner cell lie in the layer.
        for (x, &h) in grid.points().iter().zip(&hat) {
            if !h {
                let dist = s.domain.boxes().iter().map(|b| b.boundary_distance(x)).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(dist <= reach * (1.0 + 1e-9));
            }
        }
    }
}
