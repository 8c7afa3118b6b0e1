use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule; index 7 is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and refinement budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// Result of a scalar integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]`; `b` may be `+inf`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    integrate_with_breakpoints(f, a, b, &[], QuadratureOptions::with_rel_tol(tol))
}

/// As [`integrate_1d`], splitting the range at known kinks or sharp features.
pub fn integrate_with_breakpoints<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadratureOptions,
) -> Result<Integral> {
    let r = integrate_vec(|x, out| out[0] = f(x), 1, a, b, breakpoints, opts)?;
    Ok(Integral {
        value: r.values[0],
        error: r.error,
        evaluations: r.evaluations,
    })
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone, PartialEq)]
pub struct VecIntegral {
    pub values: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    error: f64,
    resabs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration of a vector-valued integrand sharing one set of nodes.
///
/// `f(x, out)` writes `dim` components. Error control uses the largest
/// component error against the largest component magnitude.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: QuadratureOptions,
) -> Result<VecIntegral> {
    if !a.is_finite() {
        return Err(domain("lower integration limit", a));
    }
    if b.is_nan() || b < a {
        return Err(domain("upper integration limit", b));
    }
    if !(opts.rel_tol > 0.0) && !(opts.abs_tol > 0.0) {
        return Err(domain("quadrature tolerance", opts.rel_tol));
    }
    if b == a {
        return Ok(VecIntegral {
            values: vec![0.0; dim],
            error: 0.0,
            evaluations: 0,
        });
    }
    let infinite = b == f64::INFINITY;
    let (lo, hi) = if infinite { (0.0, 1.0) } else { (a, b) };
    let to_t = |x: f64| {
        if infinite {
            let u = x - a;
            u / (1.0 + u)
        } else {
            x
        }
    };
    let mut g = |t: f64, out: &mut [f64]| {
        if infinite {
            let s = 1.0 - t;
            f(a + t / s, out);
            let jac = 1.0 / (s * s);
            out.iter_mut().for_each(|v| *v *= jac);
        } else {
            f(t, out);
        }
    };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b && x.is_finite())
        .map(to_t)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);

    let mut buf = vec![0.0; 15 * dim];
    let mut evaluations = 0;
    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut g, dim, w[0], w[1], &mut buf));
            evaluations += 15;
        }
    }

    let (mut values, mut error, mut resabs) = totals(&heap, dim);
    let mut subdivisions = 0;
    loop {
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = opts
            .abs_tol
            .max(opts.rel_tol * scale)
            .max(100.0 * f64::EPSILON * resabs);
        if error.is_finite() && error <= target {
            let (values, error, _) = totals(&heap, dim);
            return Ok(VecIntegral {
                values,
                error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= opts.max_subdivisions || !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            let (values, error, _) = totals(&heap, dim);
            return Err(Error::Quadrature {
                estimate: values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                error,
                subdivisions,
            });
        }
        let left = gk15(&mut g, dim, worst.a, mid, &mut buf);
        let right = gk15(&mut g, dim, mid, worst.b, &mut buf);
        evaluations += 30;
        subdivisions += 1;
        for c in 0..dim {
            values[c] += left.values[c] + right.values[c] - worst.values[c];
        }
        resabs += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
        // the running error sum is recomputed to keep it free of drift
        error = heap.iter().map(|s| s.error).sum();
    }
}

fn totals(heap: &BinaryHeap<Segment>, dim: usize) -> (Vec<f64>, f64, f64) {
    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    let mut resabs = 0.0;
    for s in heap.iter() {
        for (v, x) in values.iter_mut().zip(&s.values) {
            *v += x;
        }
        error += s.error;
        resabs += s.resabs;
    }
    (values, error, resabs)
}

fn gk15<G: FnMut(f64, &mut [f64])>(g: &mut G, dim: usize, a: f64, b: f64, buf: &mut [f64]) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // buf rows: 0..7 left nodes, 7..14 right nodes, 14 centre
    for j in 0..7 {
        let dx = half * XGK[j];
        g(center - dx, &mut buf[j * dim..(j + 1) * dim]);
        g(center + dx, &mut buf[(7 + j) * dim..(8 + j) * dim]);
    }
    g(center, &mut buf[14 * dim..15 * dim]);

    let mut values = Vec::with_capacity(dim);
    let mut error: f64 = 0.0;
    let mut resabs_max: f64 = 0.0;
    for c in 0..dim {
        let fc = buf[14 * dim + c];
        let mut resk = WGK[7] * fc;
        let mut resg = WG[3] * fc;
        let mut resabs = WGK[7] * fc.abs();
        for j in 0..7 {
            let f1 = buf[j * dim + c];
            let f2 = buf[(7 + j) * dim + c];
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((buf[j * dim + c] - mean).abs() + (buf[(7 + j) * dim + c] - mean).abs());
        }
        let resabs = resabs * half.abs();
        let resasc = resasc * half.abs();
        let mut err = ((resk - resg) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        if !resk.is_finite() {
            err = f64::INFINITY;
        }
        values.push(resk * half);
        error = error.max(err);
        resabs_max = resabs_max.max(resabs);
    }
    Segment {
        a,
        b,
        values,
        error,
        resabs: resabs_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_rule_is_exact_for_low_degree_polynomials() {
        let total: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((total - 2.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((gauss - 2.0).abs() < 1e-15);
        for deg in [2, 10, 20, 22] {
            let mut buf = vec![0.0; 15];
            let s = gk15(&mut |x: f64, o: &mut [f64]| o[0] = x.powi(deg), 1, -1.0, 1.0, &mut buf);
            let exact = 2.0 / (deg as f64 + 1.0);
            assert!((s.values[0] - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn reference_integrals() {
        let r = integrate_1d(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-9).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let r = integrate_1d(|x| 4.0 / (1.0 + x * x), 0.0, 1.0, 1e-9).unwrap();
        assert!((r.value - PI).abs() < 1e-9 * PI);
    }

    #[test]
    fn breakpoints_resolve_steps() {
        let opts = QuadratureOptions::default();
        let r = integrate_with_breakpoints(
            |x| if x < 0.3 { 1.0 } else { 0.0 },
            0.0,
            1.0,
            &[0.3],
            opts,
        )
        .unwrap();
        assert!((r.value - 0.3).abs() < 1e-14);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let opts = QuadratureOptions {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_subdivisions: 3,
        };
        let r = integrate_with_breakpoints(|x: f64| x.sqrt().recip(), 0.0, 1.0, &[], opts);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn vector_components_share_nodes() {
        let r = integrate_vec(
            |x, out| {
                out[0] = x;
                out[1] = x * x;
            },
            2,
            0.0,
            2.0,
            &[],
            QuadratureOptions::default(),
        )
        .unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-14);
        assert!((r.values[1] - 8.0 / 3.0).abs() < 1e-14);
    }
}
