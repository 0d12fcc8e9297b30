//! Gauss–Kronrod quadrature, plain adaptive and coupled.
//!
//! The coupled integrator evaluates integrals of the form
//!
//! ```text
//! H(t) = int_x^t h(s) ds,        I = int_x^b g(t, H(t)) dt
//! ```
//!
//! on one shared partition. Cells are processed from left to right so that
//! `H` at the start of every cell is already known; inside a cell `H` at each
//! Kronrod node is obtained by a local rule on `[cell start, node]`.

use crate::error::{Error, Result};

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

/// Weights of the embedded 7-point Gauss rule, on `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod abscissae of `[a, b]` in increasing order.
fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut t = [0.0; 15];
    for i in 0..7 {
        t[i] = c - h * XGK[i];
        t[14 - i] = c + h * XGK[i];
    }
    t[7] = c;
    t
}

/// Kronrod and Gauss sums for values given at `kronrod_nodes(a, b)`.
fn kronrod_gauss(values: &[f64; 15], a: f64, b: f64) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * values[7];
    let mut g = WG[3] * values[7];
    for i in 0..7 {
        let pair = values[i] + values[14 - i];
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, g * h)
}

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let nodes = kronrod_nodes(a, b);
    let mut values = [0.0; 15];
    for (v, &t) in values.iter_mut().zip(nodes.iter()) {
        *v = f(t)?;
    }
    let (k, g) = kronrod_gauss(&values, a, b);
    Ok((k, (k - g).abs()))
}

/// An integral together with its accumulated Kronrod-minus-Gauss estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_cells: 4000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

fn split_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

/// Globally adaptive GK15 quadrature of a fallible integrand. Cells never
/// straddle a point of `breaks`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    if !(a < b) {
        return Err(Error::Domain(format!("integration bounds out of order: [{a}, {b}]")));
    }
    let pts = split_points(a, b, breaks);
    let mut cells: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1])?;
        cells.push((w[0], w[1], v, e));
    }
    loop {
        let value: f64 = cells.iter().map(|c| c.2).sum();
        let error: f64 = cells.iter().map(|c| c.3).sum();
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || cells.len() >= opts.max_cells {
            if !value.is_finite() {
                return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
            }
            return Ok(Integral { value, error });
        }
        let (worst, _) = cells
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one cell");
        let (lo, hi, _, _) = cells.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(Integral { value, error });
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        cells.push((lo, mid, v1, e1));
        cells.push((mid, hi, v2, e2));
    }
}

/// Contribution of one accepted cell of the coupled scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub start: f64,
    pub end: f64,
    pub value: f64,
    /// `H` at `end`.
    pub hazard_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledIntegral {
    /// `H(b)`.
    pub hazard: f64,
    pub hazard_error: f64,
    pub value: f64,
    pub value_error: f64,
    pub cells: Vec<Cell>,
}

const MAX_DEPTH: u32 = 48;

/// Integrates `hazard` and `outer(t, H(t))` over `[x, b]` on one adaptive
/// partition. A cell is split when either the hazard increment or the outer
/// increment has a Kronrod-minus-Gauss error above `abs_tol * width / (b - x)`.
pub fn integrate_coupled<H, G>(
    mut hazard: H,
    mut outer: G,
    x: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<CoupledIntegral>
where
    H: FnMut(f64) -> Result<f64>,
    G: FnMut(f64, f64) -> Result<f64>,
{
    let mut out = CoupledIntegral {
        hazard: 0.0,
        hazard_error: 0.0,
        value: 0.0,
        value_error: 0.0,
        cells: Vec::new(),
    };
    if x == b {
        return Ok(out);
    }
    if !(x < b) {
        return Err(Error::Domain(format!("integration bounds out of order: [{x}, {b}]")));
    }
    let span = b - x;
    let pts = split_points(x, b, breaks);
    // Stack of pending cells; the leftmost sits on top.
    let mut pending: Vec<(f64, f64, u32)> = pts.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    let mut h_at_start = 0.0;
    while let Some((a, c, depth)) = pending.pop() {
        let budget = opts.abs_tol * (c - a) / span;
        let (dh, dh_err) = gk15(&mut hazard, a, c)?;
        let nodes = kronrod_nodes(a, c);
        let mut values = [0.0; 15];
        let mut inner_err: f64 = 0.0;
        for (v, &t) in values.iter_mut().zip(nodes.iter()) {
            let (hi, he) = gk15(&mut hazard, a, t)?;
            inner_err = inner_err.max(he);
            *v = outer(t, h_at_start + hi)?;
        }
        let (k, g) = kronrod_gauss(&values, a, c);
        let o_err = (k - g).abs();
        let converged = dh_err <= budget && o_err <= budget && inner_err <= budget;
        if !converged && depth < MAX_DEPTH {
            let mid = 0.5 * (a + c);
            if mid > a && mid < c {
                pending.push((mid, c, depth + 1));
                pending.push((a, mid, depth + 1));
                continue;
            }
        }
        if !(k.is_finite() && dh.is_finite()) {
            return Err(Error::Quadrature(format!("non-finite increment on [{a}, {c}]")));
        }
        h_at_start += dh;
        out.hazard_error += dh_err;
        out.value += k;
        // Outer integrands carry a factor e^{-H}, so an error in H is relative.
        out.value_error += o_err + inner_err * k.abs();
        out.cells.push(Cell {
            start: a,
            end: c,
            value: k,
            hazard_end: h_at_start,
        });
    }
    out.hazard = h_at_start;
    Ok(out)
}
