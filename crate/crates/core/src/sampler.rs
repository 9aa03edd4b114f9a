//! Bipartite (alpha, gamma)-sampler graphs.
//!
//! A sampler is a d-regular bipartite graph on two copies of `[n]` such that
//! for every right set `T`, all but an alpha fraction of left vertices `s`
//! satisfy `|E(s,T)|/d - |T|/n <= gamma`, where `E(s,T)` counts the edges
//! (with multiplicity) from `s` into `T`.
//!
//! Edges are addressed through a rotation map: port `j` of left vertex `u`
//! leads to right vertex `v`, arriving at port `j'` of `v`.

use std::io::{Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{infeasible, invalid, Result};

/// Degree of the Gabber-Galil base graph.
const GG_DEGREE: u32 = 8;
/// Largest side size for which dense eigenvalue computations are attempted.
pub const MAX_SPECTRAL_N: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub alpha: f64,
    pub gamma: f64,
    pub n: usize,
}

impl SamplerParams {
    pub fn new(alpha: f64, gamma: f64, n: usize) -> Result<SamplerParams> {
        if !(alpha > 0.0 && alpha < 1.0) || !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("need 0 < alpha, gamma < 1, got ({alpha}, {gamma})")));
        }
        if n < 2 {
            return Err(invalid(format!("sampler side size must be at least 2, got {n}")));
        }
        Ok(SamplerParams { alpha, gamma, n })
    }

    /// Spectral threshold sqrt(alpha) * gamma.
    pub fn lambda_target(&self) -> f64 {
        self.alpha.sqrt() * self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SamplerMode {
    /// Power of the merged Gabber-Galil graph.
    Explicit { power: u32, base_degree: u32 },
    /// Union of edge-disjoint random perfect matchings.
    SeededRandom { seed: u64 },
    /// Caller-supplied rotation table.
    Table,
}

#[derive(Clone, Debug)]
enum Rotation {
    /// Rotation map of the (symmetric) base graph; ports of the powered graph
    /// are base-D digit strings, least significant digit first.
    Powered {
        base: Vec<(u32, u32)>,
        base_degree: u32,
        power: u32,
    },
    Table {
        fwd: Vec<(u32, u32)>,
        rev: Vec<(u32, u32)>,
    },
}

#[derive(Clone, Debug)]
pub struct SamplerGraph {
    n: usize,
    d: u64,
    mode: SamplerMode,
    rotation: Rotation,
    /// Second largest absolute eigenvalue of the normalized base graph.
    base_lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    /// Second largest singular value of the normalized biadjacency matrix.
    pub lambda2: Option<f64>,
    pub lambda_target: f64,
    pub spectral_pass: bool,
    pub trials: usize,
    /// Largest fraction of violating left vertices over all sampled sets.
    pub max_violation_fraction: f64,
    pub empirical_pass: bool,
    pub pass: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    n: usize,
    d: u64,
    #[serde(flatten)]
    mode: SamplerMode,
}

impl SamplerGraph {
    /// Merged Gabber-Galil graph raised to the smallest power whose second
    /// eigenvalue is at most sqrt(alpha) * gamma, then doubled into a
    /// bipartite graph.
    pub fn build_explicit(params: &SamplerParams) -> Result<SamplerGraph> {
        let n = params.n;
        if n < 4 {
            return Err(invalid(format!("explicit samplers need n >= 4, got {n}")));
        }
        if n > MAX_SPECTRAL_N {
            return Err(infeasible(format!(
                "explicit sampler with n={n} exceeds the spectral measurement limit {MAX_SPECTRAL_N}"
            )));
        }
        let (base, base_degree) = merged_gabber_galil(n);
        let lambda = symmetric_lambda(n, base_degree, &base);
        if lambda >= 1.0 - 1e-12 {
            return Err(infeasible(format!("base graph on {n} vertices is not an expander")));
        }
        let target = params.lambda_target();
        let power = ((target.ln() / lambda.ln()).ceil() as u32).max(1);
        let d = u64::from(base_degree).checked_pow(power).filter(|&d| d <= 1 << 62).ok_or_else(|| {
            infeasible(format!(
                "explicit sampler degree {base_degree}^{power} exceeds 2^62; use a seeded-random sampler"
            ))
        })?;
        Ok(SamplerGraph {
            n,
            d,
            mode: SamplerMode::Explicit { power, base_degree },
            rotation: Rotation::Powered { base, base_degree, power },
            base_lambda: Some(lambda),
        })
    }

    /// Union of `d` edge-disjoint random perfect matchings, deterministic in
    /// `seed`. With `d = n` this is the complete bipartite graph.
    pub fn build_seeded_random(n: usize, d: usize, seed: u64) -> Result<SamplerGraph> {
        if n < 1 || d < 1 || d > n {
            return Err(invalid(format!("need 1 <= d <= n, got n={n}, d={d}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // used[u] = right vertices already adjacent to u
        let mut used: Vec<Vec<u32>> = vec![Vec::with_capacity(d); n];
        let mut fwd = vec![(0u32, 0u32); n * d];
        for j in 0..d {
            let matching = random_disjoint_matching(n, &used, &mut rng);
            for (u, &v) in matching.iter().enumerate() {
                used[u].push(v);
                fwd[u * d + j] = (v, j as u32);
            }
        }
        let rev = invert_table(n, d, &fwd)?;
        Ok(SamplerGraph {
            n,
            d: d as u64,
            mode: SamplerMode::SeededRandom { seed },
            rotation: Rotation::Table { fwd, rev },
            base_lambda: None,
        })
    }

    /// Complete bipartite graph with rotation(u, j) = (j, u).
    pub fn complete(n: usize) -> SamplerGraph {
        let fwd: Vec<(u32, u32)> = (0..n).flat_map(|u| (0..n).map(move |j| (j as u32, u as u32))).collect();
        let rev = fwd.clone();
        SamplerGraph {
            n,
            d: n as u64,
            mode: SamplerMode::Table,
            rotation: Rotation::Table { fwd, rev },
            base_lambda: None,
        }
    }

    /// Graph from an explicit rotation table (`fwd[u*d + j] = (v, j')`),
    /// which must be a bijection on (vertex, port) pairs.
    pub fn from_table(n: usize, d: usize, fwd: Vec<(u32, u32)>) -> Result<SamplerGraph> {
        if fwd.len() != n * d {
            return Err(invalid(format!("rotation table has {} entries, expected {}", fwd.len(), n * d)));
        }
        let rev = invert_table(n, d, &fwd)?;
        Ok(SamplerGraph {
            n,
            d: d as u64,
            mode: SamplerMode::Table,
            rotation: Rotation::Table { fwd, rev },
            base_lambda: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u64 {
        self.d
    }

    pub fn mode(&self) -> &SamplerMode {
        &self.mode
    }

    /// Right endpoint of the `j`-th edge of left vertex `u`, and its port there.
    pub fn rotation(&self, u: usize, j: u64) -> Result<(usize, u64)> {
        self.check(u, j)?;
        Ok(self.rotation_unchecked(u, j))
    }

    /// Left endpoint of the `j'`-th edge of right vertex `v`, and its port there.
    pub fn reverse_rotation(&self, v: usize, j: u64) -> Result<(usize, u64)> {
        self.check(v, j)?;
        Ok(self.reverse_rotation_unchecked(v, j))
    }

    fn check(&self, u: usize, j: u64) -> Result<()> {
        if u >= self.n || j >= self.d {
            return Err(invalid(format!("vertex/port ({u}, {j}) out of range for n={}, d={}", self.n, self.d)));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn rotation_unchecked(&self, u: usize, j: u64) -> (usize, u64) {
        match &self.rotation {
            Rotation::Table { fwd, .. } => {
                let (v, p) = fwd[u * self.d as usize + j as usize];
                (v as usize, u64::from(p))
            }
            Rotation::Powered { base, base_degree, power } => walk(base, *base_degree, *power, u, j),
        }
    }

    #[inline]
    pub(crate) fn reverse_rotation_unchecked(&self, v: usize, j: u64) -> (usize, u64) {
        match &self.rotation {
            Rotation::Table { rev, .. } => {
                let (u, p) = rev[v * self.d as usize + j as usize];
                (u as usize, u64::from(p))
            }
            // The powered graph is undirected, so its rotation is an involution.
            Rotation::Powered { base, base_degree, power } => walk(base, *base_degree, *power, v, j),
        }
    }

    /// Number of edges from left vertex `s` into `t` (`t[v]` marks membership),
    /// for every `s`.
    pub fn edge_counts(&self, t: &[bool]) -> Vec<u64> {
        assert_eq!(t.len(), self.n);
        match &self.rotation {
            Rotation::Table { fwd, .. } => {
                let d = self.d as usize;
                (0..self.n)
                    .map(|s| fwd[s * d..(s + 1) * d].iter().filter(|(v, _)| t[*v as usize]).count() as u64)
                    .collect()
            }
            Rotation::Powered { base, base_degree, power } => {
                // Walk counting: after i rounds, c[u] = number of length-i walks
                // from u ending in t.
                let dd = *base_degree as usize;
                let mut c: Vec<u64> = t.iter().map(|&b| u64::from(b)).collect();
                let mut next = vec![0u64; self.n];
                for _ in 0..*power {
                    for (u, slot) in next.iter_mut().enumerate() {
                        *slot = base[u * dd..(u + 1) * dd].iter().map(|(v, _)| c[*v as usize]).sum();
                    }
                    std::mem::swap(&mut c, &mut next);
                }
                c
            }
        }
    }

    /// Second largest singular value of the normalized biadjacency matrix,
    /// or `None` when `n` is too large for a dense computation.
    pub fn lambda2(&self) -> Option<f64> {
        if self.n > MAX_SPECTRAL_N {
            return None;
        }
        match &self.rotation {
            Rotation::Powered { power, .. } => self.base_lambda.map(|l| l.powi(*power as i32)),
            Rotation::Table { fwd, .. } => {
                let n = self.n;
                let d = self.d as usize;
                let mut b = DMatrix::<f64>::zeros(n, n);
                for u in 0..n {
                    for &(v, _) in &fwd[u * d..(u + 1) * d] {
                        b[(u, v as usize)] += 1.0 / d as f64;
                    }
                }
                let gram = &b * b.transpose();
                let mut sv: Vec<f64> =
                    SymmetricEigen::new(gram).eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
                sv.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
                Some(if n >= 2 { sv[1] } else { 0.0 })
            }
        }
    }

    /// Second largest absolute eigenvalue of the normalized base graph
    /// (explicit mode only).
    pub fn base_lambda(&self) -> Option<f64> {
        self.base_lambda
    }

    /// Spectral check plus `trials` random right sets of uniformly random
    /// size, each scored by its fraction of violating left vertices.
    pub fn certify(&self, params: &SamplerParams, trials: usize, seed: u64) -> CertReport {
        let lambda2 = self.lambda2();
        let target = params.lambda_target();
        let spectral_pass = lambda2.is_some_and(|l| l <= target);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n;
        let d = self.d as f64;
        let mut idx: Vec<usize> = (0..n).collect();
        let mut max_violation = 0.0f64;
        for _ in 0..trials.max(1) {
            let size = rng.random_range(0..=n);
            idx.shuffle(&mut rng);
            let mut t = vec![false; n];
            for &v in &idx[..size] {
                t[v] = true;
            }
            let frac_t = size as f64 / n as f64;
            let violators = self.edge_counts(&t).iter().filter(|&&c| c as f64 / d - frac_t > params.gamma).count();
            max_violation = max_violation.max(violators as f64 / n as f64);
        }
        let empirical_pass = max_violation <= params.alpha;
        CertReport {
            lambda2,
            lambda_target: target,
            spectral_pass,
            trials: trials.max(1),
            max_violation_fraction: max_violation,
            empirical_pass,
            pass: spectral_pass || empirical_pass,
        }
    }

    /// JSON header line, then the rotation table as little-endian u32 pairs
    /// (the base table for explicit graphs).
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = Header { n: self.n, d: self.d, mode: self.mode.clone() };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let table = match &self.rotation {
            Rotation::Powered { base, .. } => base,
            Rotation::Table { fwd, .. } => fwd,
        };
        for &(v, p) in table {
            w.write_all(&v.to_le_bytes())?;
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<SamplerGraph> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| invalid(format!("read failed: {e}")))?;
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| invalid("missing header"))?;
        let header: Header =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| invalid(format!("bad graph header: {e}")))?;
        let body = &bytes[nl + 1..];
        if body.len() % 8 != 0 {
            return Err(invalid("rotation table is not a whole number of pairs"));
        }
        let table: Vec<(u32, u32)> = body
            .chunks(8)
            .map(|c| {
                (
                    u32::from_le_bytes(c[..4].try_into().expect("4 bytes")),
                    u32::from_le_bytes(c[4..].try_into().expect("4 bytes")),
                )
            })
            .collect();
        match header.mode {
            SamplerMode::Explicit { power, base_degree } => {
                let n = header.n;
                invert_table(n, base_degree as usize, &table)?;
                let lambda = (n <= MAX_SPECTRAL_N).then(|| symmetric_lambda(n, base_degree, &table));
                Ok(SamplerGraph {
                    n,
                    d: header.d,
                    mode: header.mode,
                    rotation: Rotation::Powered { base: table, base_degree, power },
                    base_lambda: lambda,
                })
            }
            mode => {
                let d = usize::try_from(header.d).map_err(|_| invalid("degree too large"))?;
                let mut g = SamplerGraph::from_table(header.n, d, table)?;
                g.mode = mode;
                Ok(g)
            }
        }
    }
}

#[inline]
fn walk(base: &[(u32, u32)], base_degree: u32, power: u32, u: usize, j: u64) -> (usize, u64) {
    let dd = u64::from(base_degree);
    let mut v = u;
    let mut label = j;
    let mut back = 0u64;
    for _ in 0..power {
        let digit = label % dd;
        label /= dd;
        let (w, p) = base[v * base_degree as usize + digit as usize];
        v = w as usize;
        // The return walk takes the arrival ports in reverse order, so the
        // last arrival port becomes its least significant digit.
        back = back * dd + u64::from(p);
    }
    (v, back)
}

fn invert_table(n: usize, d: usize, fwd: &[(u32, u32)]) -> Result<Vec<(u32, u32)>> {
    let mut rev = vec![(u32::MAX, u32::MAX); n * d];
    for u in 0..n {
        for j in 0..d {
            let (v, p) = fwd[u * d + j];
            if v as usize >= n || p as usize >= d {
                return Err(invalid(format!("rotation ({u},{j}) -> ({v},{p}) out of range")));
            }
            let slot = &mut rev[v as usize * d + p as usize];
            if slot.0 != u32::MAX {
                return Err(invalid(format!("rotation is not a bijection at ({v},{p})")));
            }
            *slot = (u as u32, j as u32);
        }
    }
    Ok(rev)
}

/// A perfect matching (as `u -> v`) avoiding the edges in `used`. Starts from
/// a random permutation and repairs conflicts with augmenting paths.
fn random_disjoint_matching(n: usize, used: &[Vec<u32>], rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let allowed = |u: usize, v: u32| !used[u].contains(&v);
    let mut left_of: Vec<Option<usize>> = vec![None; n];
    let mut right_of: Vec<Option<u32>> = vec![None; n];
    for u in 0..n {
        if allowed(u, perm[u]) {
            right_of[u] = Some(perm[u]);
            left_of[perm[u] as usize] = Some(u);
        }
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    for u in 0..n {
        if right_of[u].is_some() {
            continue;
        }
        order.shuffle(rng);
        let mut seen = vec![false; n];
        let found = augment(u, used, &order, &mut seen, &mut left_of, &mut right_of);
        // A (n - |used[u]|)-regular bipartite graph always has a perfect matching.
        debug_assert!(found, "regular bipartite graph without a perfect matching");
    }
    right_of.into_iter().map(|v| v.expect("perfect matching")).collect()
}

fn augment(
    u: usize,
    used: &[Vec<u32>],
    order: &[u32],
    seen: &mut [bool],
    left_of: &mut [Option<usize>],
    right_of: &mut [Option<u32>],
) -> bool {
    // Iterative DFS over alternating paths.
    let mut stack: Vec<(usize, usize)> = vec![(u, 0)];
    let mut path: Vec<(usize, u32)> = Vec::new();
    while let Some(&mut (x, ref mut pos)) = stack.last_mut() {
        let mut advanced = false;
        while *pos < order.len() {
            let v = order[*pos];
            *pos += 1;
            if seen[v as usize] || used[x].contains(&v) {
                continue;
            }
            seen[v as usize] = true;
            match left_of[v as usize] {
                None => {
                    path.push((x, v));
                    for &(a, b) in &path {
                        right_of[a] = Some(b);
                        left_of[b as usize] = Some(a);
                    }
                    return true;
                }
                Some(w) => {
                    path.push((x, v));
                    stack.push((w, 0));
                    advanced = true;
                    break;
                }
            }
        }
        if !advanced {
            stack.pop();
            path.pop();
        }
    }
    false
}

/// Merged Gabber-Galil graph on `n` vertices as a symmetric rotation table.
///
/// The base graph lives on Z_m x Z_m (m^2 the smallest square >= n) with the
/// eight maps (x +- 2y, y), (x +- (2y+1), y), (x, y +- 2x), (x, y +- (2x+1));
/// port g and port g^4 are mutually inverse. Vertex i is merged with vertex
/// m^2-1-i for i < m^2-n; merged vertices have 16 ports and, when any merge
/// happened, every other vertex gets 8 self-loop ports.
pub fn merged_gabber_galil(n: usize) -> (Vec<(u32, u32)>, u32) {
    let m = (1..).find(|&m: &usize| m * m >= n).expect("some square exceeds n");
    let total = m * m;
    let merged = total - n;
    let degree = if merged > 0 { 2 * GG_DEGREE } else { GG_DEGREE };
    let dd = degree as usize;
    let new_index = |old: usize| if old < n { old } else { total - 1 - old };
    // Port offset of an old vertex inside its (possibly merged) new vertex.
    let offset = |old: usize| if old < n { 0 } else { GG_DEGREE as usize };
    let gg = |old: usize, g: usize| -> usize {
        let (x, y) = ((old / m) as i64, (old % m) as i64);
        let mm = m as i64;
        let (nx, ny) = match g {
            0 => (x + 2 * y, y),
            1 => (x + 2 * y + 1, y),
            2 => (x, y + 2 * x),
            3 => (x, y + 2 * x + 1),
            4 => (x - 2 * y, y),
            5 => (x - 2 * y - 1, y),
            6 => (x, y - 2 * x),
            _ => (x, y - 2 * x - 1),
        };
        (nx.rem_euclid(mm) * mm + ny.rem_euclid(mm)) as usize
    };
    let mut table = vec![(0u32, 0u32); n * dd];
    for old in 0..total {
        let u = new_index(old);
        for g in 0..GG_DEGREE as usize {
            let target = gg(old, g);
            let back = g ^ 4;
            let v = new_index(target);
            table[u * dd + offset(old) + g] = (v as u32, (offset(target) + back) as u32);
        }
    }
    if merged > 0 {
        for u in merged..n {
            for g in GG_DEGREE as usize..dd {
                table[u * dd + g] = (u as u32, g as u32);
            }
        }
    }
    (table, degree)
}

/// Second largest absolute eigenvalue of the normalized adjacency matrix of a
/// symmetric rotation table.
fn symmetric_lambda(n: usize, degree: u32, table: &[(u32, u32)]) -> f64 {
    let dd = degree as usize;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for &(v, _) in &table[u * dd..(u + 1) * dd] {
            a[(u, v as usize)] += 1.0 / degree as f64;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().map(|x| x.abs()).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    ev.get(1).copied().unwrap_or(0.0)
}
