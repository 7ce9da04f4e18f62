//! Finite direction sets `W_R` on the unit sphere `S^d ⊂ R^{d+1}`.
//!
//! Distances between directions are measured in two metrics: the chord
//! `‖x - w‖` and the projector trace distance `‖xxᵀ - wwᵀ‖₁ = 2√(1 - ⟨x,w⟩²)`.
//! [`eta`] converts the first into the second.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, substream};

pub const DEDUP_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-12;
const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    Circle,
    LayeredMakeWR,
    GridDnd,
    Custom,
}

/// Ring data of a layered set, enough to evaluate the layered covering bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub phi0: f64,
    pub k: usize,
    /// Chord covering radius `δ̄(S_j)` of ring `j = 0..=k`.
    pub ring_chords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub d: usize,
    pub vectors: Vec<Vec<f64>>,
    pub construction: Construction,
    /// Closed-form projector-metric covering radius, when known.
    pub delta_formula: Option<f64>,
    /// Closed-form chord covering bound, when known.
    pub chord_delta: Option<f64>,
    pub params: BTreeMap<String, f64>,
    /// Number of vectors the construction emitted before deduplication.
    pub constructed_count: usize,
    pub layers: Option<LayerInfo>,
}

impl DirectionSet {
    /// Normalizes nothing: every vector must already be a unit vector of
    /// length `d + 1`. Near-duplicates (distance ≤ 1e-9) are removed,
    /// keeping the first occurrence.
    pub fn new(d: usize, vectors: Vec<Vec<f64>>, construction: Construction) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter("direction set is empty".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != d + 1 {
                return Err(Error::Dimension(format!("vector {i} has length {}, expected {}", v.len(), d + 1)));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            let nrm = norm(v);
            if (nrm - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidParameter(format!("vector {i} has norm {nrm}, expected 1")));
            }
        }
        let constructed_count = vectors.len();
        Ok(Self {
            d,
            vectors: dedup(vectors),
            construction,
            delta_formula: None,
            chord_delta: None,
            params: BTreeMap::new(),
            constructed_count,
            layers: None,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn with_param(mut self, k: &str, v: f64) -> Self {
        self.params.insert(k.to_string(), v);
        self
    }

    /// One vector per row, 17 significant digits, after a `#` header line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, self.d, self.construction, &self.vectors)
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut width = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let row = t
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}: {f:?}", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse(format!(
                        "line {}: {} columns, expected {w}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            rows.push(row);
        }
        let w = width.ok_or_else(|| Error::Parse("no vectors in CSV".into()))?;
        if w < 2 {
            return Err(Error::Parse("vectors need at least 2 coordinates".into()));
        }
        DirectionSet::new(w - 1, rows, Construction::Custom)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: DirectionSet = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mut checked = DirectionSet::new(w.d, w.vectors.clone(), w.construction)?;
        if checked.len() != w.len() {
            return Err(Error::Parse("direction set contains duplicate vectors".into()));
        }
        checked.delta_formula = w.delta_formula;
        checked.chord_delta = w.chord_delta;
        checked.params = w.params;
        checked.constructed_count = w.constructed_count;
        checked.layers = w.layers;
        Ok(checked)
    }
}

/// Writes raw rows in the CSV layout of [`DirectionSet::write_csv`].
pub fn write_rows<W: Write>(mut out: W, d: usize, construction: Construction, rows: &[Vec<f64>]) -> Result<()> {
    writeln!(out, "# tightcr direction set v{CSV_VERSION}; d={d}; construction={construction:?}; rows={}", rows.len())?;
    for v in rows {
        let fields: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Removes vectors within `DEDUP_TOL` of an earlier one, preserving order.
fn dedup(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let keep = dedup_indices(&vectors);
    let mut out: Vec<Option<Vec<f64>>> = vectors.into_iter().map(Some).collect();
    keep.into_iter().map(|i| out[i].take().unwrap()).collect()
}

/// Indices (ascending) of the vectors that survive deduplication.
pub(crate) fn dedup_indices(vectors: &[Vec<f64>]) -> Vec<usize> {
    // sweep in order of first coordinate; only a thin window can collide
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&i, &j| vectors[i][0].total_cmp(&vectors[j][0]).then(i.cmp(&j)));
    let mut drop = vec![false; vectors.len()];
    for (pos, &i) in order.iter().enumerate() {
        if drop[i] {
            continue;
        }
        for &j in &order[pos + 1..] {
            if vectors[j][0] - vectors[i][0] > DEDUP_TOL {
                break;
            }
            if !drop[j] && dist(&vectors[i], &vectors[j]) <= DEDUP_TOL {
                // keep whichever came first in the input
                if j > i {
                    drop[j] = true;
                } else {
                    drop[i] = true;
                    break;
                }
            }
        }
    }
    (0..vectors.len()).filter(|&i| !drop[i]).collect()
}

/// `η(t) = 2|sin θ|` for the chord length `t = √(2(1 - cos θ))`.
pub fn eta(t: f64) -> f64 {
    let c = 1.0 - t * t / 2.0;
    2.0 * (1.0 - c * c).max(0.0).sqrt()
}

/// `‖xxᵀ - wwᵀ‖₁` for unit vectors.
pub fn projector_distance(x: &[f64], w: &[f64]) -> f64 {
    let o = dot(x, w);
    2.0 * (1.0 - o * o).max(0.0).sqrt()
}

/// `(cos 2πj/N, sin 2πj/N)` for `j = 1..=N`.
pub fn circlepoints(n: usize) -> Result<Vec<[f64; 2]>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("circlepoints needs N >= 3, got {n}")));
    }
    Ok((1..=n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            [t.cos(), t.sin()]
        })
        .collect())
}

/// Chord distance between neighbours of `circlepoints(N)`.
pub fn circle_chord(n: usize) -> f64 {
    (2.0 - 2.0 * (2.0 * PI / n as f64).cos()).sqrt()
}

/// `circlepoints(N)` as a direction set with `d = 1`.
pub fn circle_set(n: usize) -> Result<DirectionSet> {
    let pts = circlepoints(n)?;
    let mut w = DirectionSet::new(1, pts.iter().map(|p| p.to_vec()).collect(), Construction::Circle)?
        .with_param("N", n as f64);
    w.chord_delta = Some(circle_chord(n));
    // worst direction sits halfway between neighbours; exact for even N,
    // an upper bound for odd N where antipodes interleave
    w.delta_formula = Some(2.0 * (PI / n as f64).sin());
    Ok(w)
}

/// Rings `(cos φ_j, sin φ_j · y)` for `y ∈ S_j`, `φ_j = φ₀ j / k`, `j = 0..=k`.
/// `rings` holds either one set used for every ring or `k + 1` sets.
pub fn layered_wr(rings: &[DirectionSet], phi0: f64, k: usize) -> Result<DirectionSet> {
    let (rows, chords, d) = layered_rows(rings, phi0, k)?;
    let mut w = DirectionSet::new(d, rows, Construction::Custom)?
        .with_param("k", k as f64)
        .with_param("phi0", phi0);
    w.layers = chords.map(|ring_chords| LayerInfo { phi0, k, ring_chords });
    Ok(w)
}

fn layered_rows(rings: &[DirectionSet], phi0: f64, k: usize) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>, usize)> {
    if k == 0 {
        return Err(Error::InvalidParameter("layered construction needs k >= 1".into()));
    }
    if !(phi0 > 0.0 && phi0 < PI / 2.0) {
        return Err(Error::InvalidParameter(format!("phi0 must lie in (0, π/2), got {phi0}")));
    }
    if rings.len() != 1 && rings.len() != k + 1 {
        return Err(Error::InvalidParameter(format!(
            "expected 1 or {} ring sets, got {}",
            k + 1,
            rings.len()
        )));
    }
    let rd = rings[0].d;
    if rings.iter().any(|r| r.d != rd) {
        return Err(Error::Dimension("ring sets live on spheres of different dimension".into()));
    }
    let ring = |j: usize| if rings.len() == 1 { &rings[0] } else { &rings[j] };
    let mut rows = Vec::new();
    for j in 0..=k {
        let phi = phi0 * j as f64 / k as f64;
        let (c, s) = (phi.cos(), phi.sin());
        for y in &ring(j).vectors {
            let mut v = Vec::with_capacity(rd + 2);
            v.push(c);
            v.extend(y.iter().map(|t| s * t));
            rows.push(v);
        }
    }
    let chords: Option<Vec<f64>> = (0..=k).map(|j| ring(j).chord_delta).collect();
    Ok((rows, chords, rd + 1))
}

/// Rows of the `makeWR` construction before deduplication.
pub fn make_wr_rows(n: usize, k: usize, phi0: f64) -> Result<Vec<Vec<f64>>> {
    if n < 20 {
        return Err(Error::InvalidParameter(format!("makeWR needs N >= 20, got {n}")));
    }
    let rings = make_wr_rings(n, k)?;
    Ok(layered_rows(&rings, phi0, k)?.0)
}

fn make_wr_rings(n: usize, k: usize) -> Result<Vec<DirectionSet>> {
    if k == 0 {
        return Err(Error::InvalidParameter("makeWR needs k >= 1".into()));
    }
    (1..=k + 1)
        .map(|idx| {
            let curr = ((idx as f64 / k as f64).powf(0.25) * n as f64).ceil() as usize;
            circle_set(curr.max(20))
        })
        .collect()
}

/// The layered set of the random-model experiment: ring `idx = 1..=k+1` has
/// `max(⌈(idx/k)^{1/4} N⌉, 20)` circle points at latitude `φ₀(idx-1)/k`.
pub fn make_wr(n: usize, k: usize, phi0: f64) -> Result<DirectionSet> {
    if n < 20 {
        return Err(Error::InvalidParameter(format!("makeWR needs N >= 20, got {n}")));
    }
    let rings = make_wr_rings(n, k)?;
    let mut w = layered_wr(&rings, phi0, k)?;
    w.construction = Construction::LayeredMakeWR;
    w.params.insert("N".into(), n as f64);
    Ok(w)
}

/// Rows of `D_{n,d}` before deduplication (`n^d` of them).
pub fn grid_dnd_rows(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    if n < 3 || d < 1 {
        return Err(Error::InvalidParameter(format!("grid_dnd needs n >= 3 and d >= 1, got ({n}, {d})")));
    }
    let angles: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let mut rows: Vec<Vec<f64>> = angles.iter().map(|&(c, s)| vec![c, s]).collect();
    for _ in 1..d {
        rows = rows
            .iter()
            .flat_map(|v| {
                angles.iter().map(move |&(c, s)| {
                    let mut w: Vec<f64> = v.iter().map(|x| c * x).collect();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    Ok(rows)
}

/// Recursive grid `D_{n,d}` with fidelity `cos^d(π/n)` and covering radius
/// `2√(1 - cos^{2d}(π/n))`.
pub fn grid_dnd(n: usize, d: usize) -> Result<DirectionSet> {
    let rows = grid_dnd_rows(n, d)?;
    // rounding can leave norms a few ulps off
    let rows = rows
        .into_iter()
        .map(|v| {
            let s = norm(&v);
            v.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut w = DirectionSet::new(d, rows, Construction::GridDnd)?
        .with_param("n", n as f64)
        .with_param("d", d as f64);
    w.delta_formula = Some(grid_dnd_delta(n, d));
    Ok(w)
}

pub fn grid_dnd_delta(n: usize, d: usize) -> f64 {
    2.0 * (1.0 - (PI / n as f64).cos().powi(2 * d as i32)).sqrt()
}

/// Layered covering bound in the projector metric for the latitude `s = tan θ`:
/// `min_j η(√((cos θ - cos φ_j)² + (|sin θ| δ̄(S_j) + |sin θ - sin φ_j|)²))`.
pub fn layered_delta_bound(info: &LayerInfo, s: f64) -> f64 {
    let th = s.atan();
    let (c, sn) = (th.cos(), th.sin());
    (0..=info.k)
        .map(|j| {
            let phi = info.phi0 * j as f64 / info.k as f64;
            let a = c - phi.cos();
            let b = sn.abs() * info.ring_chords[j] + (sn - phi.sin()).abs();
            eta((a * a + b * b).sqrt())
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_projector_distance(w: &DirectionSet, x: &[f64]) -> f64 {
    let best = w.vectors.iter().map(|v| dot(v, x).abs()).fold(0.0, f64::max).min(1.0);
    2.0 * (1.0 - best * best).sqrt()
}

fn chunked_max<F>(samples: usize, seed: u64, f: F) -> f64
where
    F: Fn(&mut crate::rng::Rng) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(substream(seed, c as u64));
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn gaussian_unit(rng: &mut crate::rng::Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let s = norm(&v);
        if s > 1e-12 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

/// Monte-Carlo under-estimate of `δ(W) = max_x min_w ‖xxᵀ - wwᵀ‖₁` with
/// `x` uniform on `S^d`. Deterministic in `seed` for any thread count.
pub fn covering_radius_mc(w: &DirectionSet, samples: usize, seed: u64) -> f64 {
    let dim = w.d + 1;
    chunked_max(samples, seed, |rng| {
        let x = gaussian_unit(rng, dim);
        min_projector_distance(w, &x)
    })
}

/// Monte-Carlo under-estimate of `δ(s, W)`: the worst `x = (cos θ, sin θ z)`
/// with `θ = atan s` and `z` uniform on `S^{d-1}`.
pub fn covering_radius_at_latitude_mc(w: &DirectionSet, s: f64, samples: usize, seed: u64) -> f64 {
    let th = s.atan();
    let (c, sn) = (th.cos(), th.sin());
    chunked_max(samples, seed, |rng| {
        let z = gaussian_unit(rng, w.d);
        let mut x = Vec::with_capacity(w.d + 1);
        x.push(c);
        x.extend(z.iter().map(|t| sn * t));
        min_projector_distance(w, &x)
    })
}

/// Spherical-to-quantum design map `w_j = x_{2j-1} + i x_{2j}`.
pub fn spherical_to_quantum(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() % 2 != 0 {
        return Err(Error::Dimension(format!("need an even number of coordinates, got {}", x.len())));
    }
    Ok(x.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}
