//! Adaptive Gauss–Kronrod quadrature in one dimension and its nested
//! extension to axis-aligned boxes intersected with a radial shell.

use std::cell::RefCell;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod 15-point abscissae on [0, 1] (positive half, descending), with the
// 7-point Gauss rule embedded at the odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 4000;

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, abs: 0.0 }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// One G7/K15 panel on `[a, b]`.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

#[derive(Debug)]
struct Segment {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive G7/K15 integration of `f` over `[a, b]`.
///
/// The segment with the largest error estimate is bisected until the summed
/// error drops below `max(tol.abs, tol.rel * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = gk15(&mut f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est: first });

    while error > tol.target(value) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature {
                requested: tol.target(value),
                achieved: error,
            });
        }
        let seg = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Cannot bisect further in floating point.
            return Err(Error::Quadrature {
                requested: tol.target(value),
                achieved: error,
            });
        }
        let left = gk15(&mut f, seg.a, mid);
        let right = gk15(&mut f, mid, seg.b);
        value += left.value + right.value - seg.est.value;
        error += left.error + right.error - seg.est.error;
        heap.push(Segment { a: seg.a, b: mid, est: left });
        heap.push(Segment { a: mid, b: seg.b, est: right });
    }
    // Re-sum to shed the drift of the running updates.
    let (v, e) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.est.value, e + s.est.error));
    Ok(Estimate { value: v, error: e })
}

/// Integrates `f` over `[a, b]` split at the sorted interior `breaks`.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    let mut nodes = Vec::with_capacity(breaks.len() + 2);
    nodes.push(a);
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut total = Estimate { value: 0.0, error: 0.0 };
    for w in nodes.windows(2) {
        let piece = integrate(&mut f, w[0], w[1], tol)?;
        total.value += piece.value;
        total.error += piece.error;
    }
    Ok(total)
}

/// Radial window `r_in < |z| <= r_out` restricting a box integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub r_in: f64,
    pub r_out: f64,
}

impl Shell {
    pub const ALL: Shell = Shell {
        r_in: 0.0,
        r_out: f64::INFINITY,
    };

    pub fn outside(r: f64) -> Self {
        Shell {
            r_in: r,
            r_out: f64::INFINITY,
        }
    }
}

/// Integral of `density(z)` over the box `[lo, hi]` intersected with `shell`.
///
/// Dimensions are integrated as nested 1D adaptive integrals. The innermost
/// axis is clipped to the shell exactly; outer axes are split where the
/// shell boundary makes the inner integral non-smooth.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(
    density: &F,
    lo: &[f64],
    hi: &[f64],
    shell: Shell,
    rel_tol: f64,
) -> Result<f64> {
    assert_eq!(lo.len(), hi.len());
    if lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Ok(0.0);
    }
    let failure = RefCell::new(None);
    let mut prefix = Vec::with_capacity(lo.len());
    let value = nested(density, lo, hi, shell, rel_tol, &mut prefix, &failure);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

fn nested<F: Fn(&[f64]) -> f64>(
    density: &F,
    lo: &[f64],
    hi: &[f64],
    shell: Shell,
    rel_tol: f64,
    prefix: &mut Vec<f64>,
    failure: &RefCell<Option<Error>>,
) -> f64 {
    let d = prefix.len();
    let n = lo.len();
    let q: f64 = prefix.iter().map(|x| x * x).sum();
    // Inner integrals are computed more tightly so the outer error estimate
    // is not polluted by their noise.
    let level_tol = Tolerance {
        rel: rel_tol * 10f64.powi(-((n - 1 - d) as i32)),
        abs: 1e-300,
    };

    if d == n - 1 {
        let mut total = 0.0;
        for (a, b) in clip_to_shell(lo[d], hi[d], q, shell) {
            prefix.push(0.0);
            let res = integrate(
                |z| {
                    prefix[d] = z;
                    density(prefix)
                },
                a,
                b,
                level_tol,
            );
            prefix.pop();
            match res {
                Ok(est) => total += est.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                }
            }
        }
        return total;
    }

    let mut breaks = Vec::new();
    for r in [shell.r_in, shell.r_out] {
        if r.is_finite() && r * r > q {
            let t = (r * r - q).sqrt();
            breaks.push(-t);
            breaks.push(t);
        }
    }
    breaks.push(0.0);
    let res = integrate_pieces(
        |z| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            prefix.push(z);
            let v = nested(density, lo, hi, shell, rel_tol, prefix, failure);
            prefix.pop();
            v
        },
        lo[d],
        hi[d],
        &breaks,
        level_tol,
    );
    match res {
        Ok(est) => est.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    }
}

/// Subintervals of `[a, b]` where `r_in^2 < q + z^2 <= r_out^2`.
fn clip_to_shell(a: f64, b: f64, q: f64, shell: Shell) -> Vec<(f64, f64)> {
    let outer = if shell.r_out.is_finite() {
        let s = shell.r_out * shell.r_out - q;
        if s <= 0.0 {
            return Vec::new();
        }
        s.sqrt()
    } else {
        f64::INFINITY
    };
    let inner = {
        let s = shell.r_in * shell.r_in - q;
        if s > 0.0 {
            s.sqrt()
        } else {
            0.0
        }
    };
    let mut out = Vec::with_capacity(2);
    let mut push = |lo: f64, hi: f64| {
        let (l, h) = (lo.max(a), hi.min(b));
        if l < h {
            out.push((l, h));
        }
    };
    if inner > 0.0 {
        push(-outer, -inner);
        push(inner, outer);
    } else {
        push(-outer, outer);
    }
    out
}

/// Composite Kronrod rule on `[a, b]` with `panels` equal panels.
///
/// All weights are positive, so the rule maps nondecreasing integrands in a
/// parameter to nondecreasing sums.
pub fn composite_rule(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 15);
    for p in 0..panels {
        let center = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        nodes.push((center, WGK[7] * half));
        for j in 0..7 {
            nodes.push((center - half * XGK[j], WGK[j] * half));
            nodes.push((center + half * XGK[j], WGK[j] * half));
        }
    }
    nodes
}
