//! Fitting of the surrogate polynomials: interpolation and least squares.

use super::{mq, FitMethod, PolyBasis, SurrogateCoeffs, MAX_DEGREE};
use crate::fem::Stencil15;
use crate::mesh::{lattice_size, Lattice, NodeIndex};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Effective sampling level `min(l, max(1, j))`: never finer than the level
/// itself, never coarser than level 1.
pub fn sampling_level(level: u8, j: u32) -> u8 {
    (level as u32).min(j.max(1)) as u8
}

/// Interpolation points: nodal points of a shrunk macro element.
///
/// For `q = 2` these are the ten classic triples built from `1`,
/// `a = 2^(l+2) - 3` and the midpoint `b = 2^(l+1) - 1`. Degrees 1 and 3 use
/// the principal lattice of the same shrunk tetrahedron with corners
/// `{1, a}`; for degree 3 the third-points are rounded to lattice indices.
pub fn ipoly_sampling_indices(level: u8, q: u32) -> Result<Vec<NodeIndex>> {
    if level == 0 {
        return Err(Error::Fit(
            "level 0 has a single interior node; nothing to interpolate".into(),
        ));
    }
    if !(1..=3).contains(&q) {
        return Err(Error::Fit(format!("no interpolation point set for q={q}")));
    }
    let n = lattice_size(level);
    let a = n - 3;
    let b = n / 2 - 1;
    let points: Vec<(u32, u32, u32)> = match q {
        1 => vec![(1, 1, 1), (1, 1, a), (1, a, 1), (a, 1, 1)],
        2 => vec![
            (1, 1, 1),
            (1, 1, a),
            (1, a, 1),
            (a, 1, 1),
            (1, 1, b),
            (1, b, 1),
            (b, 1, 1),
            (1, b, b),
            (b, 1, b),
            (b, b, 1),
        ],
        3 => {
            // thirds of [1, a]; exact when n-4 is divisible by 3, otherwise
            // rounded down (n is a power of two, so the fraction is 1/3)
            let third = |s: u32| ((s * (n - 4)) as f64 / 3.0).round() as u32;
            let mut pts = Vec::with_capacity(mq(3));
            for s in 0..=3u32 {
                for t in 0..=3 - s {
                    for u in 0..=3 - s - t {
                        if s + t + u <= 3 {
                            pts.push((1 + third(s), 1 + third(t), 1 + third(u)));
                        }
                    }
                }
            }
            pts.truncate(mq(3));
            pts
        }
        _ => unreachable!(),
    };
    let lat = Lattice::new(level);
    let idx: Vec<NodeIndex> = points
        .iter()
        .map(|&(i, j, k)| NodeIndex::new(i, j, k, level))
        .collect();
    for p in &idx {
        if !lat.is_interior(p.i, p.j, p.k) {
            return Err(Error::Fit(format!(
                "interpolation point ({}, {}, {}) not interior at level {level}",
                p.i, p.j, p.k
            )));
        }
    }
    if idx.len() != mq(q) {
        return Err(Error::Fit(format!(
            "expected {} interpolation points, got {}",
            mq(q),
            idx.len()
        )));
    }
    Ok(idx)
}

/// Least-squares sampling set: the interior lattice of level `m(l, j)`
/// embedded into level `l` by scaling indices with `2^(l - m)`.
pub fn lsqp_sampling_indices(level: u8, j: u32) -> Vec<NodeIndex> {
    let m = sampling_level(level, j);
    let scale = 1u32 << (level - m) as u32;
    let coarse = Lattice::new(m);
    coarse
        .interior_nodes()
        .map(|(i, jj, k)| NodeIndex::new(i * scale, jj * scale, k * scale, level))
        .collect()
}

/// Interpolating surrogate: solve the square Vandermonde-type system so
/// that every direction's polynomial matches the sampled stencils exactly
/// at the sampling nodes.
pub fn fit_ipoly(
    sampler: &impl Fn(u32, u32, u32) -> Stencil15,
    level: u8,
    q: u32,
) -> Result<SurrogateCoeffs> {
    let points = ipoly_sampling_indices(level, q)?;
    let values = super::sample_all(sampler, &points);
    fit_from_samples(FitMethod::Interpolation, level, q, None, &points, &values)
}

/// Least-squares surrogate over the embedded coarse lattice `m(l, j)`,
/// solved by Householder QR (never by normal equations).
pub fn fit_lsqp(
    sampler: &impl Fn(u32, u32, u32) -> Stencil15,
    level: u8,
    q: u32,
    j: u32,
) -> Result<SurrogateCoeffs> {
    let points = lsqp_sampling_indices(level, j);
    let values = super::sample_all(sampler, &points);
    fit_from_samples(
        FitMethod::LeastSquares,
        level,
        q,
        Some(j),
        &points,
        &values,
    )
}

/// Shared solver core: one factorization, 15 right-hand sides.
pub(crate) fn fit_from_samples(
    method: FitMethod,
    level: u8,
    q: u32,
    sampling_j: Option<u32>,
    points: &[NodeIndex],
    values: &[Vec<f64>],
) -> Result<SurrogateCoeffs> {
    if q > MAX_DEGREE {
        return Err(Error::Fit(format!(
            "degree {q} exceeds the full-rank guarantee (max {MAX_DEGREE})"
        )));
    }
    let basis = PolyBasis::new(q, level);
    let m = basis.len();
    if points.len() < m {
        return Err(Error::Fit(format!(
            "{} sampling points cannot determine {m} coefficients",
            points.len()
        )));
    }
    let a = DMatrix::from_fn(points.len(), m, |r, c| {
        let p = points[r];
        let (l, mm, n) = basis.exponents[c];
        let (xp, yp, zp) = basis.powers(p.i, p.j, p.k);
        xp[l as usize] * yp[mm as usize] * zp[n as usize]
    });

    let coeffs: Vec<Vec<f64>> = match method {
        FitMethod::Interpolation => {
            let lu = a.clone().lu();
            let mut out = Vec::with_capacity(15);
            for vals in values {
                let b = DVector::from_column_slice(vals);
                let x = lu
                    .solve(&b)
                    .ok_or_else(|| Error::Fit("singular interpolation system".into()))?;
                out.push(x.as_slice().to_vec());
            }
            out
        }
        FitMethod::LeastSquares => {
            let qr = a.clone().qr();
            let r = qr.r();
            let mut dmin = f64::MAX;
            let mut dmax = 0.0f64;
            for d in 0..m {
                let v = r[(d, d)].abs();
                dmin = dmin.min(v);
                dmax = dmax.max(v);
            }
            if dmin <= 1e-12 * dmax {
                return Err(Error::Fit(format!(
                    "rank-deficient least-squares system (diag ratio {:.3e})",
                    dmin / dmax
                )));
            }
            let mut out = Vec::with_capacity(15);
            for vals in values {
                let mut b = DVector::from_column_slice(vals);
                qr.q_tr_mul(&mut b);
                let top = b.rows(0, m).into_owned();
                let x = r
                    .solve_upper_triangular(&top)
                    .ok_or_else(|| Error::Fit("triangular solve failed".into()))?;
                out.push(x.as_slice().to_vec());
            }
            out
        }
    };

    let fitted = SurrogateCoeffs {
        method,
        degree: q,
        sampling_j,
        level,
        basis,
        coeffs,
    };

    // interpolation must reproduce the samples
    if method == FitMethod::Interpolation {
        let scale = values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        for (r, p) in points.iter().enumerate() {
            for w in 0..15 {
                let eval = super::eval::eval_direct_idx(&fitted, w, p.i, p.j, p.k);
                if (eval - values[w][r]).abs() > 1e-10 * scale.max(1e-300) {
                    return Err(Error::Fit(format!(
                        "interpolation residual {:.3e} at ({}, {}, {})",
                        (eval - values[w][r]).abs(),
                        p.i,
                        p.j,
                        p.k
                    )));
                }
            }
        }
    }
    Ok(fitted)
}
