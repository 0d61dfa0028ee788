//! Guess-insertion distance search, the reductions from k-NN to a 1-NN
//! signal, and full tuple recovery by triangulation.

use super::geometry::triangulate;
use super::oracle::{ClassOracle, OracleMode, TupleHandle};
use super::AttackError;
use crate::kde::DataTuple;
use crate::math::seeded_rng;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// How the guess radius is narrowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Binary search; every guess is deleted after its query.
    Binary,
    /// Guesses from the bound inward in steps of epsilon; nothing deleted.
    Linear,
    /// Binary search without deletion. A too-near guess blocks the current
    /// query, so the search moves to a fresh query point close enough to
    /// carry the narrowed distance bracket along.
    Restart,
    /// `Binary` when the oracle allows deletion, else `Restart`.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct AttackConfig {
    /// Width of the final distance bracket.
    pub epsilon: f64,
    pub strategy: SearchStrategy,
    /// Triangulation misfit above which probes are treated as straddling
    /// Voronoi cells.
    pub residual_tolerance: f64,
    /// Query-point moves tried per restart before giving up.
    pub restart_attempts: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: (-20f64).exp2(),
            strategy: SearchStrategy::Auto,
            residual_tolerance: 1e-3,
            restart_attempts: 64,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            residual_tolerance: (64.0 * epsilon).max(1e-9),
            ..Self::default()
        }
    }

    fn resolve(&self, deletion_allowed: bool) -> Result<SearchStrategy, AttackError> {
        match (self.strategy, deletion_allowed) {
            (SearchStrategy::Auto, true) => Ok(SearchStrategy::Binary),
            (SearchStrategy::Auto, false) => Ok(SearchStrategy::Restart),
            (SearchStrategy::Binary, false) => Err(AttackError::DeletionNotAllowed),
            (s, _) => Ok(s),
        }
    }
}

/// A 1-NN view of `q`: the target's class, a guess class that differs from
/// it, and the fillers inserted to get there.
#[derive(Debug, Clone)]
pub struct NnView {
    pub target_class: usize,
    pub guess_class: usize,
    pub fillers: Vec<TupleHandle>,
}

impl NnView {
    /// A guess is nearer than the target exactly when the target's class
    /// drops out of the answer.
    fn guess_nearer(&self, labels: &[usize]) -> bool {
        !labels.contains(&self.target_class)
    }
}

pub(crate) fn random_direction(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Unit vector near `hint`, jittered so repeated guesses do not stack.
fn direction(rng: &mut ChaCha20Rng, dim: usize, hint: Option<&[f64]>) -> Vec<f64> {
    let r = random_direction(rng, dim);
    match hint {
        None => r,
        Some(h) => {
            let v: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + 0.1 * b).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        }
    }
}

fn offset(q: &[f64], u: &[f64], r: f64) -> Vec<f64> {
    q.iter().zip(u).map(|(a, b)| a + r * b).collect()
}

fn insert_fillers<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    classes: &[usize],
    delta_fill: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<TupleHandle>, AttackError> {
    classes
        .iter()
        .map(|&c| {
            let u = random_direction(rng, q.len());
            oracle.insert(DataTuple::new(offset(q, &u, delta_fill), c))
        })
        .collect()
}

/// Inserts `k - 1` tuples of `filler_class` at distance `delta_fill` from `q`,
/// so only the nearest other tuple can still show up beside them.
pub fn reduce_knn_to_1nn<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    filler_class: usize,
    delta_fill: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<TupleHandle>, AttackError> {
    if oracle.mode() != OracleMode::ReturnAllLabels {
        return Err(AttackError::Unsupported(
            "label-set reduction needs the all-labels oracle",
        ));
    }
    if filler_class >= oracle.classes() {
        return Err(AttackError::Unsupported("filler class out of range"));
    }
    let classes = vec![filler_class; oracle.k().saturating_sub(1)];
    insert_fillers(oracle, q, &classes, delta_fill, rng)
}

/// Inserts `k - 1` tuples split evenly over all classes next to `q`, so the
/// majority is decided by the nearest other tuple.
pub fn reduce_majority_to_1nn<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    delta_fill: f64,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<TupleHandle>, AttackError> {
    if oracle.mode() != OracleMode::MajorityOnly {
        return Err(AttackError::Unsupported(
            "majority reduction needs the majority oracle",
        ));
    }
    let c = oracle.classes();
    let k = oracle.k();
    if c < 2 {
        return Err(AttackError::Unsupported(
            "majority reduction needs two classes",
        ));
    }
    if !(k - 1).is_multiple_of(c) {
        return Err(AttackError::Unsupported(
            "k - 1 does not split evenly over the classes",
        ));
    }
    let classes: Vec<usize> = (0..c)
        .flat_map(|cls| std::iter::repeat_n(cls, (k - 1) / c))
        .collect();
    insert_fillers(oracle, q, &classes, delta_fill, rng)
}

/// Builds a 1-NN view at `q` for whatever mode the oracle runs in.
pub fn establish_view<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    delta_fill: f64,
    rng: &mut ChaCha20Rng,
) -> Result<NnView, AttackError> {
    let c = oracle.classes();
    if c < 2 {
        return Err(AttackError::Unsupported(
            "the guess class must differ from the target class",
        ));
    }
    let k = oracle.k();
    match oracle.mode() {
        OracleMode::KdeArgmax => {
            let target_class = oracle.query(q)?.labels[0];
            Ok(NnView {
                target_class,
                guess_class: (target_class + 1) % c,
                fillers: Vec::new(),
            })
        }
        _ if k == 1 => {
            let target_class = oracle.query(q)?.labels[0];
            Ok(NnView {
                target_class,
                guess_class: (target_class + 1) % c,
                fillers: Vec::new(),
            })
        }
        OracleMode::ReturnAllLabels => {
            let before = oracle.query(q)?.labels;
            // A class absent from the k nearest cannot be the target's.
            let filler_class = (0..c).find(|cls| !before.contains(cls)).unwrap_or(0);
            let fillers = reduce_knn_to_1nn(oracle, q, filler_class, delta_fill, rng)?;
            let mut after = oracle.query(q)?.labels;
            for _ in 0..k - 1 {
                if let Some(pos) = after.iter().position(|l| *l == filler_class) {
                    after.remove(pos);
                }
            }
            let target_class = *after
                .first()
                .ok_or(AttackError::Unsupported("empty neighbor set"))?;
            if target_class == filler_class {
                return Err(AttackError::Unsupported("target shares the filler class"));
            }
            Ok(NnView {
                target_class,
                guess_class: filler_class,
                fillers,
            })
        }
        OracleMode::MajorityOnly => {
            let fillers = reduce_majority_to_1nn(oracle, q, delta_fill, rng)?;
            let target_class = oracle.query(q)?.labels[0];
            Ok(NnView {
                target_class,
                guess_class: (target_class + 1) % c,
                fillers,
            })
        }
        OracleMode::WithPlaintextDistance => {
            Err(AttackError::Unsupported("distances are already public"))
        }
    }
}

/// A 1-NN view at `q` when the target and guess classes are already known
/// from an earlier probe: only the fillers are inserted.
fn view_with_known_classes<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    (target_class, guess_class): (usize, usize),
    delta_fill: f64,
    rng: &mut ChaCha20Rng,
) -> Result<NnView, AttackError> {
    let fillers = match oracle.mode() {
        _ if oracle.k() <= 1 => Vec::new(),
        OracleMode::ReturnAllLabels => reduce_knn_to_1nn(oracle, q, guess_class, delta_fill, rng)?,
        OracleMode::MajorityOnly => reduce_majority_to_1nn(oracle, q, delta_fill, rng)?,
        _ => Vec::new(),
    };
    Ok(NnView {
        target_class,
        guess_class,
        fillers,
    })
}

/// Distance from `center` to the target that was nearest to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceEstimate {
    pub center: Vec<f64>,
    pub distance: f64,
    /// Final bracket `(lo, hi]` around the distance.
    pub lo: f64,
    pub hi: f64,
    pub restarts: usize,
}

const MAX_RESTARTS: usize = 4096;
const LINEAR_FALLBACK_STEPS: f64 = 65536.0;

/// Everything learned about the target's position from past answers.
struct Bracket {
    /// `|p - c| > r`.
    nearer: Vec<(Vec<f64>, f64)>,
    /// `|p - c| <= r`.
    farther: Vec<(Vec<f64>, f64)>,
    /// Attacker guesses still in the store.
    guesses: Vec<Vec<f64>>,
}

impl Bracket {
    fn new(q: &[f64], bound: f64) -> Self {
        Self {
            nearer: Vec::new(),
            farther: vec![(q.to_vec(), bound)],
            guesses: Vec::new(),
        }
    }

    /// Bracket on `|p - c|` by the triangle inequality, assuming `c` sees the
    /// target (so every guess is farther than it).
    fn bounds(&self, c: &[f64]) -> (f64, f64) {
        let dist = crate::kde::distance;
        let lo = self
            .nearer
            .iter()
            .map(|(cj, r)| r - dist(c, cj))
            .fold(0.0, f64::max);
        let hi = self
            .farther
            .iter()
            .map(|(cj, r)| r + dist(c, cj))
            .chain(self.guesses.iter().map(|g| dist(c, g)))
            .fold(f64::INFINITY, f64::min);
        (lo, hi)
    }
}

struct Searcher<'a, O: ClassOracle + ?Sized> {
    oracle: &'a mut O,
    view: NnView,
    rng: ChaCha20Rng,
    delete_guesses: bool,
    hint: Option<Vec<f64>>,
}

impl<O: ClassOracle + ?Sized> Searcher<'_, O> {
    /// Inserts a guess at radius `r` from `center`; true when it is nearer
    /// than the target.
    fn probe(&mut self, center: &[f64], r: f64) -> Result<bool, AttackError> {
        Ok(self.probe_at(center, r)?.0)
    }

    fn probe_at(&mut self, center: &[f64], r: f64) -> Result<(bool, Vec<f64>), AttackError> {
        let u = direction(&mut self.rng, center.len(), self.hint.as_deref());
        let g = offset(center, &u, r);
        let h = self
            .oracle
            .insert(DataTuple::new(g.clone(), self.view.guess_class))?;
        let nearer = self.view.guess_nearer(&self.oracle.query(center)?.labels);
        if self.delete_guesses {
            self.oracle.delete(h)?;
        }
        Ok((nearer, g))
    }

    /// `q` itself when it still sees the target, else the first clear point
    /// found at growing distance; returns the point and how far it moved.
    fn clear_start(
        &mut self,
        q: &[f64],
        bound: f64,
        eps: f64,
        attempts: usize,
    ) -> Result<(Vec<f64>, f64), AttackError> {
        if !self.view.guess_nearer(&self.oracle.query(q)?.labels) {
            return Ok((q.to_vec(), 0.0));
        }
        let mut s = eps;
        while s <= bound {
            for _ in 0..attempts {
                let u = random_direction(&mut self.rng, q.len());
                let c = offset(q, &u, s);
                if !self.view.guess_nearer(&self.oracle.query(&c)?.labels) {
                    return Ok((c, s));
                }
            }
            s *= 2.0;
        }
        Err(AttackError::Exhausted)
    }

    fn binary(&mut self, q: &[f64], bound: f64, eps: f64) -> Result<DistanceEstimate, AttackError> {
        let (mut lo, mut hi) = (0.0, bound);
        let mut saw_farther = false;
        while hi - lo > eps {
            let mid = 0.5 * (lo + hi);
            if self.probe(q, mid)? {
                lo = mid;
            } else {
                hi = mid;
                saw_farther = true;
            }
        }
        if !saw_farther && self.probe(q, bound)? {
            return Err(AttackError::BoundTooSmall { bound });
        }
        Ok(DistanceEstimate {
            center: q.to_vec(),
            distance: 0.5 * (lo + hi),
            lo,
            hi,
            restarts: 0,
        })
    }

    /// Scans radii from `hi` down to `lo` around a point known to see the
    /// target at a distance within `[lo, hi]`.
    fn scan(
        &mut self,
        c: &[f64],
        lo: f64,
        hi: f64,
        eps: f64,
    ) -> Result<DistanceEstimate, AttackError> {
        let mut r = hi;
        while r > lo {
            if self.probe(c, r)? {
                break;
            }
            r -= eps;
        }
        let r = r.max(lo);
        Ok(DistanceEstimate {
            center: c.to_vec(),
            distance: r + 0.5 * eps,
            lo: r,
            hi: r + eps,
            restarts: 0,
        })
    }

    fn linear(&mut self, q: &[f64], bound: f64, eps: f64) -> Result<DistanceEstimate, AttackError> {
        let steps = (bound / eps).ceil() as u64;
        for i in 0..=steps {
            let r = bound - i as f64 * eps;
            if r <= 0.0 {
                break;
            }
            if self.probe(q, r)? {
                if i == 0 {
                    return Err(AttackError::BoundTooSmall { bound });
                }
                let hi = r + eps;
                return Ok(DistanceEstimate {
                    center: q.to_vec(),
                    distance: 0.5 * (r + hi),
                    lo: r,
                    hi,
                    restarts: 0,
                });
            }
        }
        let lo = (bound - steps as f64 * eps).max(0.0);
        let hi = lo + eps;
        Ok(DistanceEstimate {
            center: q.to_vec(),
            distance: 0.5 * (lo + hi),
            lo,
            hi,
            restarts: 0,
        })
    }

    fn restart(
        &mut self,
        q: &[f64],
        bound: f64,
        eps: f64,
        attempts: usize,
    ) -> Result<DistanceEstimate, AttackError> {
        let mut center = q.to_vec();
        let mut tracker = Bracket::new(q, bound);
        // Settle the bound first: later brackets lean on it, and a guess at the
        // bound that loses cannot shadow anything.
        let (nearer, g) = self.probe_at(q, bound)?;
        if nearer {
            return Err(AttackError::BoundTooSmall { bound });
        }
        tracker.guesses.push(g);
        let (mut lo, mut hi) = (0.0f64, bound);
        let mut restarts = 0;
        while hi - lo > eps {
            let mid = 0.5 * (lo + hi);
            let (nearer, g) = self.probe_at(&center, mid)?;
            tracker.guesses.push(g);
            if !nearer {
                tracker.farther.push((center.clone(), mid));
                hi = mid;
                continue;
            }
            tracker.nearer.push((center.clone(), mid));
            lo = mid;
            if hi - lo <= eps {
                break;
            }
            // The guess now shadows the target from `center`. Look for a
            // query point that still sees the target, preferring the one whose
            // bracket, transferred from every past answer, is narrowest. The
            // bracket may widen on a restart; farther answers shrink it again.
            let w = hi - lo;
            let mut moved: Option<(Vec<f64>, f64, f64)> = None;
            'widen: for slack in [4.0, 64.0, f64::INFINITY] {
                for s in [0.25 * w, 0.5 * w, w, 2.0 * w, 0.5 * (lo + hi), lo + hi] {
                    // Each check costs one query and no insert.
                    for _ in 0..attempts {
                        let u = random_direction(&mut self.rng, center.len());
                        let c = offset(&center, &u, s);
                        let (l, h) = tracker.bounds(&c);
                        if h - l >= slack * w || moved.as_ref().is_some_and(|m| m.2 - m.1 <= h - l)
                        {
                            continue;
                        }
                        if !self.view.guess_nearer(&self.oracle.query(&c)?.labels) {
                            moved = Some((c, l, h));
                        }
                    }
                    if moved.is_some() {
                        break 'widen;
                    }
                }
            }
            let (candidate, l, h) = moved.ok_or(AttackError::Exhausted)?;
            if h - l >= 64.0 * w || restarts >= MAX_RESTARTS {
                // Binary steps from here would wall the target in. A downward
                // scan leaves only losing guesses behind until the last one.
                if (h - l) / eps > LINEAR_FALLBACK_STEPS {
                    return Err(AttackError::Exhausted);
                }
                let mut est = self.scan(&candidate, l, h, eps)?;
                est.restarts = restarts + 1;
                return Ok(est);
            }
            center = candidate;
            lo = l;
            hi = h;
            restarts += 1;
        }
        Ok(DistanceEstimate {
            center,
            distance: 0.5 * (lo + hi),
            lo,
            hi,
            restarts,
        })
    }
}

fn distance_search<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    bound: f64,
    config: &AttackConfig,
    hint: Option<Vec<f64>>,
    known: Option<(usize, usize)>,
    rng: ChaCha20Rng,
) -> Result<(DistanceEstimate, (usize, usize)), AttackError> {
    if q.len() != oracle.dim() {
        return Err(AttackError::Unsupported("query dimension"));
    }
    if !(bound > 0.0 && config.epsilon > 0.0) {
        return Err(AttackError::Unsupported(
            "bound and epsilon must be positive",
        ));
    }
    if oracle.mode() == OracleMode::WithPlaintextDistance {
        let d = oracle
            .query(q)?
            .distances
            .and_then(|d| d.first().copied())
            .ok_or(AttackError::Unsupported("oracle returned no distance"))?;
        let estimate = DistanceEstimate {
            center: q.to_vec(),
            distance: d,
            lo: d,
            hi: d,
            restarts: 0,
        };
        return Ok((estimate, (0, 0)));
    }
    let strategy = config.resolve(oracle.deletion_allowed())?;
    let mut rng = rng;
    let delta_fill = config.epsilon / 4.0;
    let view = match known {
        None => establish_view(oracle, q, delta_fill, &mut rng)?,
        Some(classes) => view_with_known_classes(oracle, q, classes, delta_fill, &mut rng)?,
    };
    let classes = (view.target_class, view.guess_class);
    let fillers = view.fillers.clone();
    let mut s = Searcher {
        oracle,
        view,
        rng,
        delete_guesses: strategy == SearchStrategy::Binary,
        hint,
    };
    // Guesses left behind by earlier searches may shadow the target from
    // `q`; a 1-NN view can move to a nearby clear start.
    let (start, moved) = if strategy != SearchStrategy::Binary && s.oracle.k() <= 1 {
        s.clear_start(q, bound, config.epsilon, config.restart_attempts)?
    } else {
        (q.to_vec(), 0.0)
    };
    let bound = bound + moved;
    let out = match strategy {
        SearchStrategy::Binary => s.binary(&start, bound, config.epsilon),
        SearchStrategy::Linear => s.linear(&start, bound, config.epsilon),
        SearchStrategy::Restart => {
            s.restart(&start, bound, config.epsilon, config.restart_attempts)
        }
        SearchStrategy::Auto => unreachable!("resolved above"),
    }?;
    if s.oracle.deletion_allowed() {
        for h in fillers {
            s.oracle.delete(h)?;
        }
    }
    Ok((out, classes))
}

/// Learns the distance from `q` to its nearest neighbor `p` using only
/// guess insertions and classification outputs. `bound` must exceed the
/// distance. Under [`SearchStrategy::Restart`] the returned center may have
/// moved away from `q`.
pub fn attack_distance_1nn<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    q: &[f64],
    bound: f64,
    config: &AttackConfig,
) -> Result<DistanceEstimate, AttackError> {
    Ok(distance_search(
        oracle,
        q,
        bound,
        config,
        None,
        None,
        seeded_rng(config.seed),
    )?
    .0)
}

/// Outcome of a full tuple recovery. The attacker never sees the truth; the
/// error is computed separately by [`AttackResult::error_against`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult {
    pub recovered_point: Vec<f64>,
    pub residual: f64,
    pub queries_used: u64,
    pub inserts_used: u64,
    pub probes: Vec<DistanceEstimate>,
}

impl AttackResult {
    pub fn error_against(&self, truth: &[f64]) -> f64 {
        crate::kde::distance(&self.recovered_point, truth)
    }
}

/// Probe layout: `center` plus `center + offset * e_i` for each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRegion {
    pub center: Vec<f64>,
    pub offset: f64,
    /// Upper bound on any probe-to-target distance.
    pub bound: f64,
}

impl ProbeRegion {
    /// Probes spanning the unit cube `[0, 1]^d`.
    pub fn unit_cube(d: usize) -> Self {
        Self {
            center: vec![0.5; d],
            offset: 0.5,
            bound: (d as f64).sqrt() * 1.5,
        }
    }

    fn probes(&self, offset: f64) -> Vec<Vec<f64>> {
        let d = self.center.len();
        let mut out = vec![self.center.clone()];
        for i in 0..d {
            let mut p = self.center.clone();
            p[i] += offset;
            out.push(p);
        }
        out
    }
}

/// Distance searches from `d + 1` probes, then triangulation. A misfit above
/// the tolerance means the probes saw different nearest neighbors; the
/// offsets are halved and the attack retried, up to four times.
pub fn attack_recover_tuple<O: ClassOracle + ?Sized>(
    oracle: &mut O,
    region: &ProbeRegion,
    config: &AttackConfig,
) -> Result<AttackResult, AttackError> {
    if region.center.len() != oracle.dim() {
        return Err(AttackError::Unsupported("region dimension"));
    }
    let start = oracle.counters();
    let mut rng = seeded_rng(config.seed);
    let mut offset = region.offset;
    let mut last_residual = f64::INFINITY;
    let mut known = None;
    for _ in 0..5 {
        let probes = region.probes(offset);
        let centroid: Vec<f64> = (0..region.center.len())
            .map(|j| probes.iter().map(|p| p[j]).sum::<f64>() / probes.len() as f64)
            .collect();
        let mut estimates = Vec::with_capacity(probes.len());
        for p in &probes {
            // Guesses point away from the other probes so leftovers in
            // no-deletion mode are unlikely to shadow them.
            let away: Vec<f64> = p.iter().zip(&centroid).map(|(a, b)| a - b).collect();
            let norm = away.iter().map(|x| x * x).sum::<f64>().sqrt();
            let hint = (norm > 1e-12).then(|| away.iter().map(|x| x / norm).collect());
            let child = crate::math::fork_rng(&mut rng);
            let (estimate, classes) =
                distance_search(oracle, p, region.bound, config, hint, known, child)?;
            if oracle.mode() != OracleMode::WithPlaintextDistance {
                known = Some(classes);
            }
            estimates.push(estimate);
        }
        let centers: Vec<Vec<f64>> = estimates.iter().map(|e| e.center.clone()).collect();
        let radii: Vec<f64> = estimates.iter().map(|e| e.distance).collect();
        match triangulate(&centers, &radii, config.residual_tolerance) {
            Ok(t) => {
                let end = oracle.counters();
                return Ok(AttackResult {
                    recovered_point: t.point,
                    residual: t.residual,
                    queries_used: end.queries - start.queries,
                    inserts_used: end.inserts - start.inserts,
                    probes: estimates,
                });
            }
            Err(AttackError::InconsistentRadii { residual }) => {
                last_residual = residual;
                offset *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(AttackError::InconsistentProbes {
        residual: last_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::oracle::{KnnOracle, OracleMode};
    use crate::kde::{distance, Dataset};

    fn single(p: &[f64], label: usize, c: usize) -> Dataset {
        Dataset::from_tuples(p.len(), c, vec![DataTuple::new(p.to_vec(), label)]).unwrap()
    }

    #[test]
    fn binary_search_finds_the_distance_within_budget() {
        let mut o = KnnOracle::new(
            single(&[0.3, 0.7], 1, 2),
            OracleMode::ReturnAllLabels,
            1,
            true,
        )
        .unwrap();
        let cfg = AttackConfig::with_epsilon(1e-5);
        let est = attack_distance_1nn(&mut o, &[0.5, 0.5], 2.0, &cfg).unwrap();
        assert!((est.distance - 0.08f64.sqrt()).abs() < 1e-4);
        let budget = (2.0 / 1e-5f64).log2().ceil() as u64 + 2;
        assert!(
            o.counters().queries <= budget,
            "{} > {budget}",
            o.counters().queries
        );
    }

    #[test]
    fn zero_distance_resolves_to_epsilon() {
        let mut o = KnnOracle::new(
            single(&[0.5, 0.5], 0, 2),
            OracleMode::ReturnAllLabels,
            1,
            true,
        )
        .unwrap();
        let cfg = AttackConfig::with_epsilon(1e-6);
        let est = attack_distance_1nn(&mut o, &[0.5, 0.5], 1.0, &cfg).unwrap();
        assert!(est.distance <= 1e-6);
    }

    #[test]
    fn bound_too_small_is_reported() {
        let mut o = KnnOracle::new(
            single(&[0.9, 0.9], 0, 2),
            OracleMode::ReturnAllLabels,
            1,
            true,
        )
        .unwrap();
        let cfg = AttackConfig::with_epsilon(1e-4);
        assert!(matches!(
            attack_distance_1nn(&mut o, &[0.0, 0.0], 0.5, &cfg),
            Err(AttackError::BoundTooSmall { .. })
        ));
    }

    #[test]
    fn knn_reduction_isolates_the_target() {
        let mut o = KnnOracle::new(
            single(&[0.2, 0.2], 1, 2),
            OracleMode::ReturnAllLabels,
            3,
            true,
        )
        .unwrap();
        let q = [0.5, 0.5];
        let mut rng = seeded_rng(1);
        let fillers = reduce_knn_to_1nn(&mut o, &q, 0, 1e-4, &mut rng).unwrap();
        assert_eq!(fillers.len(), 2);
        let d = distance(&q, &[0.2, 0.2]);
        for (r, contains) in [(d * 0.9, false), (d * 1.1, true)] {
            let h = o.insert(DataTuple::new(vec![0.5 + r, 0.5], 0)).unwrap();
            assert_eq!(o.query(&q).unwrap().labels.contains(&1), contains);
            o.delete(h).unwrap();
        }
        let mut one = KnnOracle::new(
            single(&[0.2, 0.2], 1, 2),
            OracleMode::ReturnAllLabels,
            1,
            true,
        )
        .unwrap();
        assert!(reduce_knn_to_1nn(&mut one, &q, 0, 1e-4, &mut rng)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn majority_reduction_base_case() {
        let mut o =
            KnnOracle::new(single(&[0.2, 0.2], 1, 2), OracleMode::MajorityOnly, 3, true).unwrap();
        let q = [0.5, 0.5];
        let fillers = reduce_majority_to_1nn(&mut o, &q, 1e-4, &mut seeded_rng(2)).unwrap();
        assert_eq!(fillers.len(), 2);
        assert_eq!(o.query(&q).unwrap().labels, vec![1]);

        let mut five =
            KnnOracle::new(single(&[0.2, 0.2], 1, 2), OracleMode::MajorityOnly, 5, true).unwrap();
        assert_eq!(
            reduce_majority_to_1nn(&mut five, &q, 1e-4, &mut seeded_rng(2))
                .unwrap()
                .len(),
            4
        );
        let mut even =
            KnnOracle::new(single(&[0.2, 0.2], 1, 2), OracleMode::MajorityOnly, 4, true).unwrap();
        assert!(matches!(
            reduce_majority_to_1nn(&mut even, &q, 1e-4, &mut seeded_rng(2)),
            Err(AttackError::Unsupported(_))
        ));
    }

    #[test]
    fn recovers_a_single_tuple_in_every_mode() {
        let target = [0.31, 0.62];
        let cases = [
            (OracleMode::ReturnAllLabels, 1, true, SearchStrategy::Binary),
            (OracleMode::ReturnAllLabels, 3, true, SearchStrategy::Binary),
            (OracleMode::MajorityOnly, 3, true, SearchStrategy::Binary),
            (
                OracleMode::WithPlaintextDistance,
                1,
                true,
                SearchStrategy::Auto,
            ),
            (
                OracleMode::ReturnAllLabels,
                1,
                false,
                SearchStrategy::Restart,
            ),
            (
                OracleMode::ReturnAllLabels,
                1,
                false,
                SearchStrategy::Linear,
            ),
        ];
        for (mode, k, del, strategy) in cases {
            let mut o = KnnOracle::new(single(&target, 1, 2), mode, k, del).unwrap();
            let eps = if strategy == SearchStrategy::Linear {
                1e-3
            } else {
                1e-5
            };
            let cfg = AttackConfig {
                strategy,
                ..AttackConfig::with_epsilon(eps)
            };
            let r = attack_recover_tuple(&mut o, &ProbeRegion::unit_cube(2), &cfg)
                .unwrap_or_else(|e| panic!("{mode:?} k={k} {strategy:?}: {e}"));
            assert!(
                r.error_against(&target) < 20.0 * eps,
                "{mode:?} k={k} {strategy:?}: {}",
                r.error_against(&target)
            );
        }
    }
}
