//! Surrogate polynomial approximation of the interior stencil function.
//!
//! For every macro element, level and cardinal direction the true stencil
//! function over the interior index space is replaced by a tri-variate
//! polynomial of low degree, fitted once in a setup phase. Evaluating the 15
//! polynomials at a node yields the surrogate stencil.

mod eval;
mod fit;

pub use eval::{eval_direct, eval_stencil, Axis, LineEvalState};
pub use fit::{fit_ipoly, fit_lsqp, ipoly_sampling_indices, lsqp_sampling_indices, sampling_level};

use crate::fem::{CenterRule, Stencil15, StencilProvider};
use crate::mesh::{CardinalDirection, Geometry, NodeIndex};
use crate::Result;

/// Highest supported polynomial degree; the least-squares systems keep full
/// rank for any coarsened sampling lattice up to this degree.
pub const MAX_DEGREE: u32 = 4;

/// Number of coefficients of a tri-variate polynomial of degree `q`.
pub fn mq(q: u32) -> usize {
    ((q + 3) * (q + 2) * (q + 1) / 6) as usize
}

/// Fitting strategy for the surrogate polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitMethod {
    /// Interpolation at nodal points of a shrunk macro element (IPOLY).
    Interpolation,
    /// Discrete least-squares over a (possibly coarsened) sampling lattice
    /// (LSQP).
    LeastSquares,
}

impl FitMethod {
    pub fn short_name(self) -> &'static str {
        match self {
            FitMethod::Interpolation => "ipoly",
            FitMethod::LeastSquares => "lsqp",
        }
    }
}

/// Monomial basis in lattice coordinates normalized by the lattice size
/// `n = 2^(l+2)`; normalization keeps the fit systems well conditioned.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    pub degree: u32,
    pub level: u8,
    /// Exponent triples `(l, m, n)` with `l + m + n <= degree`.
    pub exponents: Vec<(u8, u8, u8)>,
    inv_n: f64,
}

impl PolyBasis {
    pub fn new(degree: u32, level: u8) -> Self {
        assert!(degree <= MAX_DEGREE, "degree {degree} unsupported");
        let mut exponents = Vec::with_capacity(mq(degree));
        for l in 0..=degree as u8 {
            for m in 0..=(degree as u8 - l) {
                for n in 0..=(degree as u8 - l - m) {
                    exponents.push((l, m, n));
                }
            }
        }
        debug_assert_eq!(exponents.len(), mq(degree));
        Self {
            degree,
            level,
            exponents,
            inv_n: 1.0 / crate::mesh::lattice_size(level) as f64,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn scaling(&self) -> f64 {
        self.inv_n
    }

    /// Values of all basis functions at node `(i, j, k)`.
    pub fn row(&self, i: u32, j: u32, k: u32) -> Vec<f64> {
        let (xp, yp, zp) = self.powers(i, j, k);
        self.exponents
            .iter()
            .map(|&(l, m, n)| xp[l as usize] * yp[m as usize] * zp[n as usize])
            .collect()
    }

    #[inline]
    pub(crate) fn powers(&self, i: u32, j: u32, k: u32) -> ([f64; 5], [f64; 5], [f64; 5]) {
        let x = i as f64 * self.inv_n;
        let y = j as f64 * self.inv_n;
        let z = k as f64 * self.inv_n;
        let mut xp = [1.0; 5];
        let mut yp = [1.0; 5];
        let mut zp = [1.0; 5];
        for p in 1..=self.degree as usize {
            xp[p] = xp[p - 1] * x;
            yp[p] = yp[p - 1] * y;
            zp[p] = zp[p - 1] * z;
        }
        (xp, yp, zp)
    }

    /// Position of exponent `(l, m, n)` in the coefficient vector.
    pub fn index_of(&self, l: u8, m: u8, n: u8) -> usize {
        self.exponents
            .iter()
            .position(|&e| e == (l, m, n))
            .expect("exponent within degree bound")
    }
}

/// Fitted polynomial coefficients of one macro element at one level:
/// 15 coefficient vectors of length `mq(degree)`.
#[derive(Debug, Clone)]
pub struct SurrogateCoeffs {
    pub method: FitMethod,
    pub degree: u32,
    /// Sampling parameter of the least-squares fit; `None` for interpolation.
    pub sampling_j: Option<u32>,
    pub level: u8,
    pub basis: PolyBasis,
    /// `coeffs[w][c]` for direction index `w`.
    pub coeffs: Vec<Vec<f64>>,
}

impl SurrogateCoeffs {
    /// Componentwise sum of the 15 coefficient vectors; zero up to roundoff
    /// by the row-sum property of the sampled stencils.
    pub fn coefficient_row_sum(&self) -> Vec<f64> {
        let m = self.basis.len();
        let mut sum = vec![0.0; m];
        for w in 0..15 {
            for c in 0..m {
                sum[c] += self.coeffs[w][c];
            }
        }
        sum
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Aggregate setup cost of a fitted store.
#[derive(Debug, Clone, Copy, Default)]
pub struct SetupStats {
    /// Seconds spent assembling true stencils at the sampling nodes.
    pub sample_seconds: f64,
    /// Seconds spent solving the fit systems.
    pub linalg_seconds: f64,
    /// Sampling nodes on the finest level, per macro element.
    pub samples_finest: usize,
    /// Sampling nodes summed over levels 1..=L, per macro element.
    pub samples_total: usize,
}

impl SetupStats {
    pub fn total_seconds(&self) -> f64 {
        self.sample_seconds + self.linalg_seconds
    }
}

/// All fitted coefficients of a mesh hierarchy: per level (1..=L), per macro
/// element. Immutable after the setup phase.
pub struct SurrogateStore {
    pub method: FitMethod,
    pub degree: u32,
    pub sampling_j: Option<u32>,
    pub max_level: u8,
    /// `per_level[l]` is empty for `l = 0`; surrogates start at level 1.
    per_level: Vec<Vec<SurrogateCoeffs>>,
    pub stats: SetupStats,
}

impl SurrogateStore {
    /// Fit surrogates for levels `1..=max_level` of all macro elements,
    /// sampling true projected-geometry stencils.
    pub fn fit(
        topos: &[std::sync::Arc<crate::fem::LevelTopology>],
        method: FitMethod,
        degree: u32,
        sampling_j: Option<u32>,
        max_level: u8,
    ) -> Result<Self> {
        use rayon::prelude::*;
        use std::time::Instant;

        let mut per_level: Vec<Vec<SurrogateCoeffs>> = vec![Vec::new()];
        let mut stats = SetupStats::default();
        for level in 1..=max_level {
            let topo = &topos[level as usize];
            let points = match method {
                FitMethod::Interpolation => ipoly_sampling_indices(level, degree)?,
                FitMethod::LeastSquares => {
                    lsqp_sampling_indices(level, sampling_j.unwrap_or(2))
                }
            };

            let t0 = Instant::now();
            let sampled: Vec<Vec<Vec<f64>>> = topo
                .blocks
                .par_iter()
                .map(|block| {
                    let sampler = |i: u32, j: u32, k: u32| {
                        crate::fem::assemble_node_stencil(
                            block,
                            i,
                            j,
                            k,
                            Geometry::Projected,
                            CenterRule::Direct,
                        )
                    };
                    sample_all(&sampler, &points)
                })
                .collect();
            stats.sample_seconds += t0.elapsed().as_secs_f64();

            let t1 = Instant::now();
            let fitted: Result<Vec<SurrogateCoeffs>> = sampled
                .par_iter()
                .map(|values| {
                    fit::fit_from_samples(method, level, degree, sampling_j, &points, values)
                })
                .collect();
            let fitted = fitted?;
            stats.linalg_seconds += t1.elapsed().as_secs_f64();

            stats.samples_total += points.len();
            if level == max_level {
                stats.samples_finest = points.len();
            }
            per_level.push(fitted);
        }
        Ok(Self {
            method,
            degree,
            sampling_j,
            max_level,
            per_level,
            stats,
        })
    }

    /// Assemble a store from already-fitted coefficients.
    /// `per_level[l]` holds one entry per macro element; index 0 is unused.
    pub fn from_parts(
        method: FitMethod,
        degree: u32,
        sampling_j: Option<u32>,
        per_level: Vec<Vec<SurrogateCoeffs>>,
    ) -> Self {
        let max_level = (per_level.len() - 1) as u8;
        Self {
            method,
            degree,
            sampling_j,
            max_level,
            per_level,
            stats: SetupStats::default(),
        }
    }

    #[inline]
    pub fn coeffs(&self, level: u8, macro_id: u32) -> &SurrogateCoeffs {
        &self.per_level[level as usize][macro_id as usize]
    }

    pub fn has_level(&self, level: u8) -> bool {
        level >= 1 && (level as usize) < self.per_level.len()
    }

    /// Dump all coefficients as structured text, one record per
    /// (macro, level, direction), at full precision.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let j = self
            .sampling_j
            .map(|j| j.to_string())
            .unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "surrogatecoeffs v1 method={} q={} j={}",
            self.method.short_name(),
            self.degree,
            j
        )
        .unwrap();
        for level in 1..=self.max_level {
            for (m, c) in self.per_level[level as usize].iter().enumerate() {
                for w in CardinalDirection::ALL {
                    write!(out, "{} {} {}", m, level, w.short_name()).unwrap();
                    for v in &c.coeffs[w.index()] {
                        write!(out, " {:+.17e}", v).unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Stencil provider backed by fitted surrogate polynomials. Interface rows
/// always use true projected-geometry assembly.
pub struct SurrogateProvider<'a> {
    pub store: &'a SurrogateStore,
    pub level: u8,
    pub center: CenterRule,
}

impl StencilProvider for SurrogateProvider<'_> {
    #[inline]
    fn stencil(&self, macro_id: u32, i: u32, j: u32, k: u32) -> Stencil15 {
        let coeffs = self.store.coeffs(self.level, macro_id);
        let mut s = eval_stencil(coeffs, i, j, k);
        if self.center == CenterRule::RowSum {
            let mc = CardinalDirection::Center.index();
            let mut acc = 0.0;
            for (w, &v) in s.0.iter().enumerate() {
                if w != mc {
                    acc += v;
                }
            }
            s.0[mc] = -acc;
        }
        s
    }

    fn geometry(&self) -> Geometry {
        Geometry::Projected
    }
}

/// Convenience: sample a function over node indices into per-direction
/// vectors (used by fitting and the fit metrics).
pub(crate) fn sample_all(
    sampler: &impl Fn(u32, u32, u32) -> Stencil15,
    points: &[NodeIndex],
) -> Vec<Vec<f64>> {
    let mut b: Vec<Vec<f64>> = (0..15).map(|_| Vec::with_capacity(points.len())).collect();
    for p in points {
        let s = sampler(p.i, p.j, p.k);
        for (w, col) in b.iter_mut().enumerate() {
            col.push(s.0[w]);
        }
    }
    b
}
