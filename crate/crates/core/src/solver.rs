//! Exact 0-1 optimization by depth-first branch-and-bound.
//!
//! Every constraint is stored as one or more `Σ coef·x ≤ rhs` rows, some
//! guarded by a literal: the row only binds while the literal is true.
//! Propagation keeps the minimum attainable activity of each row up to date
//! and fixes variables whose coefficient exceeds the remaining slack. The
//! objective bound combines disjoint cardinality rows (`Σ x ≤ k` over
//! objective variables) with the free objective weights outside them.

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ilp::{Constraint, IpModel, LinExpr, Linear, Objective, Sense};

pub const DEFAULT_BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("model has {vars} variables, brute force is capped at {cap}")]
    TooLarge { vars: usize, cap: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    #[default]
    Activity,
    FirstUnassigned,
    Random,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    pub branching: Branching,
    pub threads: usize,
    /// Emit a progress line every this many nodes. Zero disables.
    pub log_every: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { time_limit: 60.0, seed: 0, branching: Branching::Activity, threads: 1, log_every: 100_000 }
    }
}

impl SolveConfig {
    pub fn check(&self) -> Result<(), SolveError> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(SolveError::InvalidConfig(format!("time limit must be positive, got {}", self.time_limit)));
        }
        if self.threads == 0 {
            return Err(SolveError::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub propagations: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: Status,
    pub best_assignment: Option<Vec<bool>>,
    pub objective: Option<i64>,
    /// One value per phase for lexicographic solves, otherwise the single objective.
    pub phase_objectives: Vec<i64>,
    pub stats: SolveStats,
}

/// Solves `model` to optimality or until the time limit.
pub fn solve(model: &IpModel, config: &SolveConfig) -> Result<SolveOutcome, SolveError> {
    solve_from(model, config, None)
}

/// Like [`solve`], seeding the incumbent with `start` when it satisfies the model.
pub fn solve_from(model: &IpModel, config: &SolveConfig, start: Option<&[bool]>) -> Result<SolveOutcome, SolveError> {
    config.check()?;
    let began = Instant::now();
    let deadline = began + Duration::from_secs_f64(config.time_limit);
    let obj = model.objective();
    // Internally everything maximizes.
    let flip = if obj.sense == Sense::Minimize { -1 } else { 1 };

    let shared = Shared::new();
    if let Some(s) = start {
        if let Ok((true, value)) = model.eval(s) {
            shared.offer(flip * value, s);
        }
    }

    let mut base = Engine::new(model, config);
    let root_ok = base.propagate();
    let root_bound = if root_ok { base.bound() } else { i64::MIN };
    if root_ok && shared.best() == Some(root_bound) {
        shared.proven.store(true, Ordering::Relaxed);
    }

    let mut timed_out = false;
    if root_ok && !shared.proven.load(Ordering::Relaxed) {
        if config.threads <= 1 {
            let mut engine = base;
            timed_out = engine.search(&shared, deadline, root_bound, began) == End::Timeout;
            shared.add_stats(&engine);
        } else {
            timed_out = run_parallel(base, config, &shared, deadline, root_bound, began);
        }
    }

    let (best, assignment) = shared.take();
    let status = match (best, timed_out && !shared.proven.load(Ordering::Relaxed)) {
        (Some(_), false) => Status::Optimal,
        (Some(_), true) => Status::Feasible,
        (None, false) => Status::Infeasible,
        (None, true) => Status::Timeout,
    };
    let objective = best.map(|b| flip * b);
    if let Some(a) = &assignment {
        debug_assert_eq!(model.eval(a).ok(), Some((true, objective.unwrap())));
    }
    Ok(SolveOutcome {
        status,
        best_assignment: assignment,
        objective,
        phase_objectives: objective.into_iter().collect(),
        stats: SolveStats {
            nodes: shared.nodes.load(Ordering::Relaxed),
            propagations: shared.propagations.load(Ordering::Relaxed),
            wall_time: began.elapsed(),
        },
    })
}

/// Optimizes the model objective, then each of `secondary` in turn while
/// holding every earlier objective at the value reached.
pub fn solve_lexicographic(
    model: &IpModel,
    secondary: &[Objective],
    config: &SolveConfig,
) -> Result<SolveOutcome, SolveError> {
    config.check()?;
    let began = Instant::now();
    let mut current = model.clone();
    let mut warm: Option<Vec<bool>> = None;
    let mut phases = Vec::new();
    let mut stats = SolveStats::default();
    let mut proven = true;
    let objectives: Vec<Objective> = std::iter::once(model.objective().clone()).chain(secondary.iter().cloned()).collect();
    for (k, obj) in objectives.iter().enumerate() {
        current.set_objective(obj.clone()).map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
        let remaining = config.time_limit - began.elapsed().as_secs_f64();
        let out = if remaining > 0.0 {
            let cfg = SolveConfig { time_limit: remaining, ..config.clone() };
            solve_from(&current, &cfg, warm.as_deref())?
        } else {
            // Out of time: keep the warm start as the answer for this phase.
            let value = warm.as_ref().map(|w| obj.expr.value(w));
            SolveOutcome {
                status: if value.is_some() { Status::Feasible } else { Status::Timeout },
                best_assignment: warm.clone(),
                objective: value,
                phase_objectives: value.into_iter().collect(),
                stats: SolveStats::default(),
            }
        };
        stats.nodes += out.stats.nodes;
        stats.propagations += out.stats.propagations;
        log::debug!("phase={} status={} objective={:?}", k + 1, out.status.as_str(), out.objective);
        match out.status {
            Status::Infeasible | Status::Timeout => {
                stats.wall_time = began.elapsed();
                return Ok(SolveOutcome { status: out.status, phase_objectives: phases, stats, ..out });
            }
            Status::Feasible => proven = false,
            Status::Optimal => {}
        }
        let value = out.objective.expect("solution present");
        phases.push(value);
        let hold = match obj.sense {
            Sense::Maximize => Linear::ge(obj.expr.clone(), value),
            Sense::Minimize => Linear::le(obj.expr.clone(), value),
        };
        current.add_linear(hold).map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
        warm = out.best_assignment;
    }
    stats.wall_time = began.elapsed();
    Ok(SolveOutcome {
        status: if proven { Status::Optimal } else { Status::Feasible },
        best_assignment: warm,
        objective: phases.last().copied(),
        phase_objectives: phases,
        stats,
    })
}

/// Exhaustive enumeration with the default variable cap.
pub fn brute_force(model: &IpModel) -> Result<SolveOutcome, SolveError> {
    brute_force_lexicographic_capped(model, &[], DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_capped(model: &IpModel, cap: usize) -> Result<SolveOutcome, SolveError> {
    brute_force_lexicographic_capped(model, &[], cap)
}

/// Exhaustive lexicographic optimum: the model objective first, then `secondary`.
pub fn brute_force_lexicographic(model: &IpModel, secondary: &[Objective]) -> Result<SolveOutcome, SolveError> {
    brute_force_lexicographic_capped(model, secondary, DEFAULT_BRUTE_FORCE_CAP)
}

fn brute_force_lexicographic_capped(
    model: &IpModel,
    secondary: &[Objective],
    cap: usize,
) -> Result<SolveOutcome, SolveError> {
    let n = model.num_vars();
    if n > cap {
        return Err(SolveError::TooLarge { vars: n, cap });
    }
    let began = Instant::now();
    let objectives: Vec<&Objective> = std::iter::once(model.objective()).chain(secondary).collect();
    // Scores are negated for minimization so larger is always better.
    let score = |a: &[bool]| -> Vec<i64> {
        objectives
            .iter()
            .map(|o| if o.sense == Sense::Minimize { -o.expr.value(a) } else { o.expr.value(a) })
            .collect()
    };
    let mut best: Option<(Vec<i64>, Vec<bool>)> = None;
    let mut a = vec![false; n];
    for bits in 0u64..(1u64 << n) {
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = bits >> k & 1 == 1;
        }
        let (ok, _) = model.eval(&a).expect("total assignment");
        if !ok {
            continue;
        }
        let s = score(&a);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, a.clone()));
        }
    }
    let stats = SolveStats { nodes: 1u64 << n, propagations: 0, wall_time: began.elapsed() };
    Ok(match best {
        None => SolveOutcome {
            status: Status::Infeasible,
            best_assignment: None,
            objective: None,
            phase_objectives: vec![],
            stats,
        },
        Some((_, a)) => {
            let phases: Vec<i64> = objectives.iter().map(|o| o.expr.value(&a)).collect();
            SolveOutcome {
                status: Status::Optimal,
                objective: phases.last().copied(),
                phase_objectives: phases,
                best_assignment: Some(a),
                stats,
            }
        }
    })
}

/// Incumbent and counters shared by all workers.
struct Shared {
    best: AtomicI64,
    incumbent: Mutex<Option<Vec<bool>>>,
    /// Set once the incumbent meets the root bound.
    proven: AtomicBool,
    nodes: AtomicU64,
    propagations: AtomicU64,
}

const NO_VALUE: i64 = i64::MIN;

impl Shared {
    fn new() -> Self {
        Shared {
            best: AtomicI64::new(NO_VALUE),
            incumbent: Mutex::new(None),
            proven: AtomicBool::new(false),
            nodes: AtomicU64::new(0),
            propagations: AtomicU64::new(0),
        }
    }

    fn best(&self) -> Option<i64> {
        match self.best.load(Ordering::Acquire) {
            NO_VALUE => None,
            b => Some(b),
        }
    }

    fn offer(&self, value: i64, assignment: &[bool]) -> bool {
        let mut guard = self.incumbent.lock().expect("incumbent lock");
        let current = self.best.load(Ordering::Acquire);
        if current != NO_VALUE && value <= current {
            return false;
        }
        *guard = Some(assignment.to_vec());
        self.best.store(value, Ordering::Release);
        true
    }

    fn take(&self) -> (Option<i64>, Option<Vec<bool>>) {
        (self.best(), self.incumbent.lock().expect("incumbent lock").clone())
    }

    fn add_stats(&self, e: &Engine) {
        self.nodes.fetch_add(e.nodes, Ordering::Relaxed);
        self.propagations.fetch_add(e.propagations, Ordering::Relaxed);
    }
}

fn run_parallel(
    mut base: Engine,
    config: &SolveConfig,
    shared: &Shared,
    deadline: Instant,
    root_bound: i64,
    began: Instant,
) -> bool {
    // Split on the first variables of the branching order.
    let want = (config.threads * 4).next_power_of_two().trailing_zeros() as usize;
    let mut split = Vec::new();
    while split.len() < want {
        match base.pick() {
            Some(v) => split.push(v),
            None => break,
        }
    }
    for &v in &split {
        base.heap.insert(v);
    }
    let jobs = 1usize << split.len();
    let next = AtomicUsize::new(0);
    let timed_out = AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..config.threads.min(jobs) {
            scope.spawn(|| loop {
                let job = next.fetch_add(1, Ordering::Relaxed);
                if job >= jobs || shared.proven.load(Ordering::Relaxed) {
                    break;
                }
                let mut engine = base.clone();
                let mut ok = true;
                for (bit, &v) in split.iter().enumerate() {
                    let value = engine.prefer[v as usize] ^ (job >> bit & 1 == 1);
                    match engine.val[v as usize] {
                        UNSET => engine.assign(v, value),
                        cur if (cur == 1) != value => ok = false,
                        _ => {}
                    }
                }
                ok = ok && engine.propagate();
                if ok && engine.search(shared, deadline, root_bound, began) == End::Timeout {
                    timed_out.store(true, Ordering::Relaxed);
                }
                shared.add_stats(&engine);
            });
        }
    });
    timed_out.load(Ordering::Relaxed)
}

const UNSET: i8 = -1;

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(i64, u32)>,
    rhs: i64,
    guard: Option<(u32, bool)>,
    minact: i64,
    maxabs: i64,
}

#[derive(Debug, Clone)]
struct Cover {
    /// Sorted by objective weight, heaviest first.
    vars: Vec<u32>,
    k: i64,
}

/// Indexed binary heap ordering variables by (hint class, activity, tie rank).
#[derive(Debug, Clone)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
    class: Vec<u32>,
    tie: Vec<u32>,
    act: Vec<f64>,
}

const ABSENT: usize = usize::MAX;

impl VarHeap {
    fn new(class: Vec<u32>, tie: Vec<u32>) -> Self {
        let n = class.len();
        let mut h = VarHeap { heap: Vec::with_capacity(n), pos: vec![ABSENT; n], class, tie, act: vec![0.0; n] };
        for v in 0..n as u32 {
            h.insert(v);
        }
        h
    }

    fn before(&self, a: u32, b: u32) -> bool {
        let (a, b) = (a as usize, b as usize);
        (self.class[a], -self.act[a], self.tie[a]) < (self.class[b], -self.act[b], self.tie[b])
    }

    fn up(&mut self, mut k: usize) {
        let v = self.heap[k];
        while k > 0 {
            let parent = (k - 1) / 2;
            if !self.before(v, self.heap[parent]) {
                break;
            }
            self.heap[k] = self.heap[parent];
            self.pos[self.heap[k] as usize] = k;
            k = parent;
        }
        self.heap[k] = v;
        self.pos[v as usize] = k;
    }

    fn down(&mut self, mut k: usize) {
        let v = self.heap[k];
        loop {
            let left = 2 * k + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len() && self.before(self.heap[right], self.heap[left]) { right } else { left };
            if !self.before(self.heap[child], v) {
                break;
            }
            self.heap[k] = self.heap[child];
            self.pos[self.heap[k] as usize] = k;
            k = child;
        }
        self.heap[k] = v;
        self.pos[v as usize] = k;
    }

    fn insert(&mut self, v: u32) {
        if self.pos[v as usize] != ABSENT {
            return;
        }
        self.heap.push(v);
        let k = self.heap.len() - 1;
        self.pos[v as usize] = k;
        self.up(k);
    }

    fn pop(&mut self) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0);
        }
        Some(top)
    }

    fn bump(&mut self, v: u32, inc: f64) {
        self.act[v as usize] += inc;
        if self.pos[v as usize] != ABSENT {
            self.up(self.pos[v as usize]);
        }
    }

    fn rescale(&mut self) {
        for a in &mut self.act {
            *a *= 1e-100;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Exhausted,
    Timeout,
}

#[derive(Debug, Clone, Copy)]
struct Decision {
    var: u32,
    value: bool,
    flipped: bool,
    trail_len: usize,
}

#[derive(Debug, Clone)]
struct Engine {
    rows: Vec<Row>,
    occ: Vec<Vec<(u32, i64)>>,
    guard_occ: Vec<Vec<u32>>,
    val: Vec<i8>,
    trail: Vec<u32>,
    decisions: Vec<Decision>,
    queue: Vec<u32>,
    queued: Vec<bool>,
    heap: VarHeap,
    bump_activity: bool,
    var_inc: f64,
    prefer: Vec<bool>,
    weights: Vec<i64>,
    obj_const: i64,
    covers: Vec<Cover>,
    uncovered: Vec<u32>,
    cutoff_row: usize,
    cutoff_best: i64,
    conflict: Option<u32>,
    nodes: u64,
    propagations: u64,
    log_every: u64,
}

impl Engine {
    fn new(model: &IpModel, config: &SolveConfig) -> Self {
        let n = model.num_vars();
        let obj = model.objective();
        let flip = if obj.sense == Sense::Minimize { -1 } else { 1 };
        let expr = obj.expr.canonical();
        let mut weights = vec![0i64; n];
        for &(c, v) in &expr.terms {
            weights[v.index()] = flip * c;
        }
        let obj_const = flip * expr.constant;

        let mut rows = Vec::new();
        let mut push = |expr: LinExpr, rhs: i64, guard: Option<(u32, bool)>| {
            rows.push(Row { terms: expr.terms.iter().map(|&(c, v)| (c, v.0)).collect(), rhs, guard, minact: 0, maxabs: 0 });
        };
        for c in model.constraints() {
            match c {
                Constraint::Linear(l) => {
                    for (e, k) in l.as_le_rows() {
                        push(e, k, None);
                    }
                }
                Constraint::Implication { antecedent, consequent } => {
                    for (e, k) in consequent.as_le_rows() {
                        push(e, k, Some((antecedent.0, true)));
                    }
                }
                Constraint::Reified { indicator, iff } => {
                    let rows_ = iff.as_le_rows();
                    debug_assert_eq!(rows_.len(), 1);
                    let (e, k) = rows_.into_iter().next().expect("one row");
                    let neg = LinExpr { terms: e.terms.iter().map(|&(c, v)| (-c, v)).collect(), constant: 0 };
                    push(e, k, Some((indicator.0, true)));
                    push(neg, -k - 1, Some((indicator.0, false)));
                }
            }
        }
        let cutoff_expr = LinExpr {
            terms: (0..n).filter(|&v| weights[v] != 0).map(|v| (-weights[v], crate::ilp::VarId(v as u32))).collect(),
            constant: 0,
        };
        push(cutoff_expr, i64::MAX / 4, None);
        let cutoff_row = rows.len() - 1;

        let mut occ = vec![Vec::new(); n];
        let mut guard_occ = vec![Vec::new(); n];
        for (r, row) in rows.iter_mut().enumerate() {
            row.minact = row.terms.iter().map(|&(c, _)| c.min(0)).sum();
            row.maxabs = row.terms.iter().map(|&(c, _)| c.abs()).max().unwrap_or(0);
            for &(c, v) in &row.terms {
                occ[v as usize].push((r as u32, c));
            }
            if let Some((g, _)) = row.guard {
                guard_occ[g as usize].push(r as u32);
            }
        }

        let (covers, uncovered) = pick_covers(&rows, &weights);

        let class: Vec<u32> = model.vars().iter().map(|v| v.hint.priority).collect();
        let mut tie: Vec<u32> = (0..n as u32).collect();
        if config.branching == Branching::Random {
            tie.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
        }
        let prefer = model.vars().iter().enumerate().map(|(k, v)| v.hint.prefer.unwrap_or(weights[k] > 0)).collect();

        let mut e = Engine {
            queued: vec![false; rows.len()],
            rows,
            occ,
            guard_occ,
            val: vec![UNSET; n],
            trail: Vec::with_capacity(n),
            decisions: Vec::new(),
            queue: Vec::new(),
            heap: VarHeap::new(class, tie),
            bump_activity: config.branching == Branching::Activity,
            var_inc: 1.0,
            prefer,
            weights,
            obj_const,
            covers,
            uncovered,
            cutoff_row,
            cutoff_best: NO_VALUE,
            conflict: None,
            nodes: 0,
            propagations: 0,
            log_every: config.log_every,
        };
        for r in 0..e.rows.len() {
            e.enqueue(r as u32);
        }
        e
    }

    fn enqueue(&mut self, r: u32) {
        if !self.queued[r as usize] {
            self.queued[r as usize] = true;
            self.queue.push(r);
        }
    }

    fn assign(&mut self, v: u32, value: bool) {
        debug_assert_eq!(self.val[v as usize], UNSET);
        self.val[v as usize] = value as i8;
        self.trail.push(v);
        let x = value as i64;
        for k in 0..self.occ[v as usize].len() {
            let (r, c) = self.occ[v as usize][k];
            let row = &mut self.rows[r as usize];
            row.minact += c * x - c.min(0);
            if row.rhs - row.minact < row.maxabs {
                self.enqueue(r);
            }
        }
        for k in 0..self.guard_occ[v as usize].len() {
            let r = self.guard_occ[v as usize][k];
            self.enqueue(r);
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().expect("trail entry");
            let x = self.val[v as usize] as i64;
            for &(r, c) in &self.occ[v as usize] {
                self.rows[r as usize].minact -= c * x - c.min(0);
            }
            self.val[v as usize] = UNSET;
            self.heap.insert(v);
        }
    }

    /// Runs rows in the queue to a fixpoint. False on conflict.
    fn propagate(&mut self) -> bool {
        let mut forced: Vec<(u32, bool)> = Vec::new();
        while let Some(r) = self.queue.pop() {
            self.queued[r as usize] = false;
            let row = &self.rows[r as usize];
            let slack = row.rhs - row.minact;
            if let Some((g, pol)) = row.guard {
                match self.val[g as usize] {
                    UNSET => {
                        if slack < 0 {
                            self.propagations += 1;
                            self.assign(g, !pol);
                        }
                        continue;
                    }
                    x if (x == 1) != pol => continue,
                    _ => {}
                }
            }
            if slack < 0 {
                self.conflict = Some(r);
                for q in self.queue.drain(..) {
                    self.queued[q as usize] = false;
                }
                return false;
            }
            if slack < row.maxabs {
                forced.extend(
                    row.terms
                        .iter()
                        .filter(|&&(c, v)| self.val[v as usize] == UNSET && c.abs() > slack)
                        .map(|&(c, v)| (v, c < 0)),
                );
                for (v, value) in forced.drain(..) {
                    if self.val[v as usize] == UNSET {
                        self.propagations += 1;
                        self.assign(v, value);
                    }
                }
            }
        }
        true
    }

    /// Upper bound on the max-form objective below the current node.
    fn bound(&self) -> i64 {
        let mut b = self.obj_const;
        for cover in &self.covers {
            let mut room = cover.k;
            for &v in &cover.vars {
                if self.val[v as usize] == 1 {
                    b += self.weights[v as usize];
                    room -= 1;
                }
            }
            for &v in &cover.vars {
                let w = self.weights[v as usize];
                if room <= 0 || w <= 0 {
                    break;
                }
                if self.val[v as usize] == UNSET {
                    b += w;
                    room -= 1;
                }
            }
        }
        for &v in &self.uncovered {
            let w = self.weights[v as usize];
            match self.val[v as usize] {
                1 => b += w,
                UNSET if w > 0 => b += w,
                _ => {}
            }
        }
        b
    }

    fn value(&self) -> i64 {
        self.obj_const + (0..self.val.len()).filter(|&v| self.val[v] == 1).map(|v| self.weights[v]).sum::<i64>()
    }

    fn pick(&mut self) -> Option<u32> {
        while let Some(v) = self.heap.pop() {
            if self.val[v as usize] == UNSET {
                return Some(v);
            }
        }
        None
    }

    fn bump_conflict(&mut self) {
        if !self.bump_activity {
            return;
        }
        let Some(r) = self.conflict.take() else { return };
        if r as usize == self.cutoff_row {
            return;
        }
        let row = &self.rows[r as usize];
        let vars: Vec<u32> = row.terms.iter().map(|&(_, v)| v).chain(row.guard.map(|(g, _)| g)).collect();
        for v in vars {
            self.heap.bump(v, self.var_inc);
        }
        self.var_inc /= 0.95;
        if self.var_inc > 1e100 {
            self.heap.rescale();
            self.var_inc *= 1e-100;
        }
    }

    /// Tightens the objective cutoff to the shared incumbent. False on conflict.
    fn sync_cutoff(&mut self, shared: &Shared) -> bool {
        let Some(best) = shared.best() else { return true };
        if best <= self.cutoff_best {
            return true;
        }
        self.cutoff_best = best;
        // Require obj >= best + 1, i.e. -Σ w·x <= const - best - 1.
        self.rows[self.cutoff_row].rhs = self.obj_const - best - 1;
        self.enqueue(self.cutoff_row as u32);
        self.propagate()
    }

    /// Undoes decisions until an untried branch propagates cleanly.
    fn backtrack(&mut self) -> bool {
        self.bump_conflict();
        while let Some(d) = self.decisions.pop() {
            self.undo_to(d.trail_len);
            if d.flipped {
                continue;
            }
            self.decisions.push(Decision { var: d.var, value: !d.value, flipped: true, trail_len: d.trail_len });
            self.assign(d.var, !d.value);
            if self.propagate() {
                return true;
            }
            self.bump_conflict();
        }
        false
    }

    fn search(&mut self, shared: &Shared, deadline: Instant, root_bound: i64, began: Instant) -> End {
        loop {
            self.nodes += 1;
            if self.nodes & 255 == 1 && (Instant::now() >= deadline) {
                return End::Timeout;
            }
            if shared.proven.load(Ordering::Relaxed) {
                return End::Exhausted;
            }
            if self.log_every > 0 && self.nodes % self.log_every == 0 {
                log::info!(
                    "nodes={} incumbent={} bound={} elapsed_ms={}",
                    self.nodes,
                    shared.best().map_or("none".to_string(), |b| b.to_string()),
                    root_bound,
                    began.elapsed().as_millis()
                );
            }
            let mut alive = self.sync_cutoff(shared);
            if alive && shared.best().is_some_and(|b| self.bound() <= b) {
                alive = false;
            }
            if alive {
                match self.pick() {
                    None => {
                        let value = self.value();
                        let assignment: Vec<bool> = self.val.iter().map(|&x| x == 1).collect();
                        if shared.offer(value, &assignment) && value >= root_bound {
                            shared.proven.store(true, Ordering::Relaxed);
                            return End::Exhausted;
                        }
                    }
                    Some(v) => {
                        let value = self.prefer[v as usize];
                        self.decisions.push(Decision { var: v, value, flipped: false, trail_len: self.trail.len() });
                        self.assign(v, value);
                        if self.propagate() {
                            continue;
                        }
                    }
                }
            }
            if !self.backtrack() {
                return End::Exhausted;
            }
        }
    }
}

/// Greedy choice of disjoint unguarded `Σ x ≤ k` rows over positive-weight
/// variables, largest bound reduction first.
fn pick_covers(rows: &[Row], weights: &[i64]) -> (Vec<Cover>, Vec<u32>) {
    let mut candidates: Vec<(i64, usize, Cover)> = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        if row.guard.is_some()
            || row.rhs < 0
            || row.terms.is_empty()
            || row.terms.iter().any(|&(c, v)| c != 1 || weights[v as usize] <= 0)
            || row.rhs >= row.terms.len() as i64
        {
            continue;
        }
        let mut vars: Vec<u32> = row.terms.iter().map(|&(_, v)| v).collect();
        vars.sort_by_key(|&v| (-weights[v as usize], v));
        let total: i64 = vars.iter().map(|&v| weights[v as usize]).sum();
        let kept: i64 = vars.iter().take(row.rhs as usize).map(|&v| weights[v as usize]).sum();
        candidates.push((total - kept, r, Cover { vars, k: row.rhs }));
    }
    candidates.sort_by_key(|(gain, r, _)| (-gain, *r));
    let mut used = vec![false; weights.len()];
    let mut covers = Vec::new();
    for (_, _, cover) in candidates {
        if cover.vars.iter().any(|&v| used[v as usize]) {
            continue;
        }
        for &v in &cover.vars {
            used[v as usize] = true;
        }
        covers.push(cover);
    }
    let uncovered = (0..weights.len() as u32).filter(|&v| !used[v as usize] && weights[v as usize] != 0).collect();
    (covers, uncovered)
}
