//! Stage II: support augmentation.
//!
//! Stage I sometimes zeroes a true support node and smears its mass over
//! neighbours, leaving a cluster of middling magnitudes. Indices in the band
//! `(a, b)` that have a band neighbour closer than `γ` form the cluster `Λ`;
//! closed balls of radius `r` around them give the candidate set `Λ̃`, which is
//! merged into the support and seeded with a target value `α`.

use crate::config::{AlphaPolicy, RecoveryConfig};
use crate::error::{Error, Result};
use crate::fista::effective_support;
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

/// Integer offsets in `[-⌊radius⌋, ⌊radius⌋]^order` whose squared norm passes `keep`.
fn ball_offsets(order: usize, radius: f64, keep: impl Fn(usize) -> bool) -> Vec<Vec<isize>> {
    let m = radius.floor().max(0.0) as isize;
    let side = (2 * m + 1) as usize;
    let total = side.pow(order as u32);
    let mut out = Vec::new();
    let mut v = vec![-m; order];
    for _ in 0..total {
        let n2: usize = v.iter().map(|&c| (c * c) as usize).sum();
        if keep(n2) {
            out.push(v.clone());
        }
        for c in v.iter_mut() {
            *c += 1;
            if *c <= m {
                break;
            }
            *c = -m;
        }
    }
    out
}

fn shifted(idx: &[usize], offset: &[isize], shape: &[usize]) -> Option<usize> {
    let mut k = 0;
    let mut stride = 1;
    for ((&i, &o), &d) in idx.iter().zip(offset).zip(shape) {
        let c = i as isize + o;
        if c < 0 || c >= d as isize {
            return None;
        }
        k += c as usize * stride;
        stride *= d;
    }
    Some(k)
}

/// `Λ`: indices with `a < |X(j)| < b` that have a distinct band index `k` with `‖j − k‖₂ < γ`.
pub fn detect_ambiguous_cluster(x: &DenseTensor, a: f64, b: f64, gamma: f64) -> Result<SupportSet> {
    if !(a < b) || !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("band needs 0 <= a < b, got ({a}, {b})")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let shape = x.shape();
    let in_band = |v: f64| {
        let m = v.abs();
        a < m && m < b
    };
    let band: Vec<usize> = (0..x.len()).filter(|&k| in_band(x.data()[k])).collect();
    let offsets = ball_offsets(x.order(), gamma, |n2| n2 > 0 && (n2 as f64) < gamma * gamma);
    let mut out = SupportSet::empty(shape);
    for &k in &band {
        let idx = x.multi_index(k);
        let paired = offsets.iter().any(|o| {
            shifted(&idx, o, shape).is_some_and(|n| in_band(x.data()[n]))
        });
        if paired {
            out.insert(k);
        }
    }
    Ok(out)
}

/// `Λ̃ = ⋃_{j ∈ Λ} B(j, r)` with closed Euclidean balls, clipped to the grid.
pub fn dilate_support(cluster: &SupportSet, r: f64) -> Result<SupportSet> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation radius must be positive, got {r}")));
    }
    let shape = cluster.shape();
    let r2 = r * r * (1.0 + 1e-12);
    let offsets = ball_offsets(shape.len(), r, |n2| (n2 as f64) <= r2);
    let mut out = SupportSet::empty(shape);
    for idx in cluster.tuples() {
        for o in &offsets {
            if let Some(n) = shifted(&idx, o, shape) {
                out.insert(n);
            }
        }
    }
    Ok(out)
}

/// The value written onto new candidates under `cfg.alpha_policy`.
pub fn resolve_alpha(x: &DenseTensor, support: &SupportSet, cfg: &RecoveryConfig) -> f64 {
    match cfg.alpha_policy {
        AlphaPolicy::Fixed(v) => v,
        AlphaPolicy::MedianOfSupport => {
            let mut mags: Vec<f64> = support.iter().map(|k| x.data()[k].abs()).collect();
            if mags.is_empty() {
                return 0.5 * (cfg.a + cfg.b);
            }
            mags.sort_by(f64::total_cmp);
            let n = mags.len();
            if n % 2 == 1 {
                mags[n / 2]
            } else {
                0.5 * (mags[n / 2 - 1] + mags[n / 2])
            }
        }
    }
}

/// `X^Aug(j) = α` on `Λ̃ \ Ω̃`, `X̃(j)` elsewhere; `Ω^Aug = Ω̃ ∪ Λ̃`.
pub fn augment_estimate(
    x: &DenseTensor,
    support: &SupportSet,
    candidates: &SupportSet,
    cfg: &RecoveryConfig,
) -> Result<(DenseTensor, SupportSet)> {
    if support.shape() != x.shape() || candidates.shape() != x.shape() {
        return Err(Error::DimensionMismatch(
            "support sets and estimate live on different grids".into(),
        ));
    }
    let alpha = resolve_alpha(x, support, cfg);
    let mut out = x.clone();
    for k in candidates.difference(support).iter() {
        out.data_mut()[k] = alpha;
    }
    Ok((out, support.union(candidates)))
}

/// Everything Stage II produces.
#[derive(Debug, Clone)]
pub struct Augmentation {
    /// `Λ`
    pub cluster: SupportSet,
    /// `Λ̃`
    pub candidates: SupportSet,
    /// `X^Aug`
    pub estimate: DenseTensor,
    /// `Ω^Aug`
    pub support: SupportSet,
}

/// Runs detect → dilate → augment on a Stage I estimate.
pub fn augment(x: &DenseTensor, cfg: &RecoveryConfig) -> Result<Augmentation> {
    let support = effective_support(x, cfg.tol);
    let cluster = detect_ambiguous_cluster(x, cfg.a, cfg.b, cfg.gamma)?;
    let candidates = dilate_support(&cluster, cfg.r)?;
    let (estimate, support) = augment_estimate(x, &support, &candidates, cfg)?;
    Ok(Augmentation {
        cluster,
        candidates,
        estimate,
        support,
    })
}
