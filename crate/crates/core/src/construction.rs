//! Bounded-stage construction of a coherent map onto a finite completely
//! normal distributive lattice, with a replayable trace.
//!
//! Stages follow a fixed round-robin schedule of three step kinds:
//!
//! * VALUE adjoins a fresh coordinate `δ_m` with `⟦δ_m⟧ ↦ e_m`, `⟦−δ_m⟧ ↦ 0`;
//!   once every element has been assigned, the slot runs CLOSURE instead.
//! * DOMAIN adjoins `±c` for the next vector `c` of a fixed enumeration.
//! * CLOSURE takes the oldest open obligation `φ⟦a⟧ ≤ φ⟦b⟧ ∨ e` and either
//!   finds a finite closedness certificate or runs the closure step.
//!
//! Every generator pair `(a, b)` yields one obligation with `e` the least
//! solution of `φ⟦a⟧ ≤ φ⟦b⟧ ∨ e`. Pairs with `φ⟦a⟧ ≤ e` hold trivially and
//! are only counted.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::LatticeError;
use crate::hom::{default_lambda_cap, Adjoined, Availability, BaseDoc, BaseHom, ClosednessSearch, FiniteClosedness, Obligation, PartialHom};
use crate::lattice::{Elem, FiniteLattice, LatticeDoc};
use crate::opminus::Term;
use crate::rational::{format_scalar, parse_scalar, serde_scalar, Coordinate, RationalVector, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Value,
    Domain,
    Closure,
}

impl StepKind {
    pub fn letter(self) -> char {
        match self {
            StepKind::Value => 'V',
            StepKind::Domain => 'D',
            StepKind::Closure => 'C',
        }
    }
}

/// Parses a schedule such as `"VDCC"`.
pub fn parse_schedule(s: &str) -> Result<Vec<StepKind>, String> {
    let out: Vec<StepKind> = s
        .chars()
        .map(|ch| match ch.to_ascii_uppercase() {
            'V' => Ok(StepKind::Value),
            'D' => Ok(StepKind::Domain),
            'C' => Ok(StepKind::Closure),
            other => Err(format!("unknown step letter {other:?}")),
        })
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err("empty schedule".into());
    }
    if !out.contains(&StepKind::Closure) {
        return Err("schedule needs a closure slot".into());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionConfig {
    pub stages: usize,
    /// Zero keeps the natural element order; anything else shuffles it.
    pub seed: u64,
    pub lambda_cap: Scalar,
    pub schedule: Vec<StepKind>,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        ConstructionConfig {
            stages: 200,
            seed: 0,
            lambda_cap: default_lambda_cap(),
            schedule: vec![StepKind::Value, StepKind::Domain, StepKind::Closure, StepKind::Closure],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigDoc {
    pub stages: usize,
    pub seed: u64,
    pub lambda_cap: String,
    pub schedule: String,
}

impl ConfigDoc {
    pub fn from_config(c: &ConstructionConfig) -> Self {
        ConfigDoc {
            stages: c.stages,
            seed: c.seed,
            lambda_cap: format_scalar(&c.lambda_cap),
            schedule: c.schedule.iter().map(|k| k.letter()).collect(),
        }
    }

    pub fn to_config(&self) -> Result<ConstructionConfig, String> {
        Ok(ConstructionConfig {
            stages: self.stages,
            seed: self.seed,
            lambda_cap: parse_scalar(&self.lambda_cap).map_err(|e| e.to_string())?,
            schedule: parse_schedule(&self.schedule)?,
        })
    }
}

/// First line of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub lattice: LatticeDoc,
    /// Labels `e₀, e₁, …` in assignment order.
    pub enumeration: Vec<String>,
    pub base: BaseDoc,
    pub config: ConfigDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnqueueRecord {
    pub id: usize,
    pub obligation: Obligation,
    /// Present when the obligation was closed on the spot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discharged: Option<FiniteClosedness>,
    /// Queue length in front of this obligation when it was queued.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ahead: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClosureOutcome {
    /// The current generators already certify closedness.
    Closed { certificate: FiniteClosedness },
    /// `ψ⟦a−λb⟧ ≤ φ⟦−b⟧ ∨ e` after adjoining the event's generators, if any.
    Lambda {
        #[serde(with = "serde_scalar")]
        lambda: Scalar,
    },
    Failed { reason: String, requeued: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureRecord {
    pub id: usize,
    pub obligation: Obligation,
    pub enqueued_at: usize,
    pub outcome: ClosureOutcome,
}

/// A queued obligation closed by a certificate found after new generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub id: usize,
    pub certificate: FiniteClosedness,
}

/// Everything that happened in one stage, in application order: adjoined
/// generators, the closure outcome, swept obligations, then newly enqueued
/// obligations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEvent {
    pub stage: usize,
    pub slot: StepKind,
    pub kind: StepKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjoined: Vec<Adjoined>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub swept: Vec<SweepRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enqueued: Vec<EnqueueRecord>,
    #[serde(default, skip_serializing_if = "is_zero_usize")]
    pub trivial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn is_zero_usize(x: &usize) -> bool {
    *x == 0
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<StageEvent>,
}

impl Trace {
    /// Header line followed by one line per stage.
    pub fn to_jsonl(&self) -> String {
        let mut s = serde_json::to_string(&self.header).expect("trace header serializes");
        s.push('\n');
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("events serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or("empty trace")?;
        let header: TraceHeader = serde_json::from_str(head).map_err(|e| format!("header: {e}"))?;
        if header.format != crate::FORMAT {
            return Err(format!("unsupported format {:?}", header.format));
        }
        let events = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("event line {}: {e}", i + 2)))
            .collect::<Result<Vec<StageEvent>, String>>()?;
        Ok(Trace { header, events })
    }

    /// The events as one JSON array.
    pub fn events_json(&self) -> String {
        serde_json::to_string(&self.events).expect("events serialize")
    }

    /// Stage graph: one node per stage, labelled with its kind and additions.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph trace {\n  rankdir=LR;\n");
        for e in &self.events {
            let label = format!("{} {}{}", e.stage, e.kind.letter(), if e.adjoined.is_empty() { String::new() } else { format!(" +{}", 2 * e.adjoined.len()) });
            s.push_str(&format!("  s{} [label={:?}];\n", e.stage, label));
        }
        for w in self.events.windows(2) {
            s.push_str(&format!("  s{} -> s{};\n", w[0].stage, w[1].stage));
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug)]
struct Queued {
    id: usize,
    ob: Obligation,
    enqueued_at: usize,
    retries: u8,
    search: ClosednessSearch,
}

/// A single construction run. Owned by one caller at a time.
#[derive(Clone, Debug)]
pub struct ConstructionState {
    lattice: Arc<FiniteLattice>,
    enumeration: Vec<Elem>,
    preference: Vec<Elem>,
    hom: PartialHom,
    config: ConstructionConfig,
    stage: usize,
    values_assigned: usize,
    attempted: BTreeSet<RationalVector>,
    queue: VecDeque<Queued>,
    next_id: usize,
    trace: Trace,
}

impl ConstructionState {
    /// Validates `lattice` and sets up stage 0. `enumeration` defaults to
    /// the nonzero elements, shuffled when the seed is nonzero.
    pub fn new(
        lattice: Arc<FiniteLattice>,
        enumeration: Option<Vec<Elem>>,
        base: BaseHom,
        config: ConstructionConfig,
    ) -> Result<Self, LatticeError> {
        if let Some((x, y, z)) = lattice.distributivity_violation() {
            return Err(LatticeError::NotDistributive(
                lattice.label(x).into(),
                lattice.label(y).into(),
                lattice.label(z).into(),
            ));
        }
        lattice.require_completely_normal()?;
        let enumeration = match enumeration {
            Some(en) => {
                if let Some(&x) = en.iter().find(|&&x| x >= lattice.len()) {
                    return Err(LatticeError::UnknownElement(x.to_string()));
                }
                let covered: BTreeSet<Elem> = en.iter().copied().collect();
                if let Some(x) = lattice.elements().find(|&x| x != lattice.zero() && !covered.contains(&x)) {
                    return Err(LatticeError::Precondition(format!("enumeration misses {:?}", lattice.label(x))));
                }
                en
            }
            None => {
                let mut en: Vec<Elem> = lattice.elements().filter(|&x| x != lattice.zero()).collect();
                if config.seed != 0 {
                    en.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
                }
                en
            }
        };
        let mut preference = vec![lattice.zero()];
        for &x in &enumeration {
            if !preference.contains(&x) {
                preference.push(x);
            }
        }
        preference.extend(lattice.elements().filter(|x| !enumeration.contains(x) && *x != lattice.zero()));
        let header = TraceHeader {
            format: crate::FORMAT.to_string(),
            lattice: lattice.to_doc(),
            enumeration: enumeration.iter().map(|&x| lattice.label(x).to_string()).collect(),
            base: BaseDoc::from_base(&base, &lattice),
            config: ConfigDoc::from_config(&config),
        };
        let hom = PartialHom::new(lattice.clone(), Arc::new(base));
        Ok(ConstructionState {
            lattice,
            enumeration,
            preference,
            hom,
            config,
            stage: 0,
            values_assigned: 0,
            attempted: BTreeSet::new(),
            queue: VecDeque::new(),
            next_id: 0,
            trace: Trace { header, events: Vec::new() },
        })
    }

    pub fn hom(&self) -> &PartialHom {
        &self.hom
    }

    pub fn lattice(&self) -> &Arc<FiniteLattice> {
        &self.lattice
    }

    pub fn enumeration(&self) -> &[Elem] {
        &self.enumeration
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn config(&self) -> &ConstructionConfig {
        &self.config
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn values_assigned(&self) -> usize {
        self.values_assigned
    }

    /// Runs all remaining stages of the budget.
    pub fn run(&mut self) {
        while self.stage < self.config.stages {
            self.run_stage();
        }
    }

    /// Runs one stage and appends its event.
    pub fn run_stage(&mut self) {
        let slot = self.config.schedule[self.stage % self.config.schedule.len()];
        let kind = if slot == StepKind::Value && self.values_assigned >= self.enumeration.len() {
            StepKind::Closure
        } else {
            slot
        };
        let mut ev = StageEvent {
            stage: self.stage,
            slot,
            kind,
            adjoined: Vec::new(),
            closure: None,
            swept: Vec::new(),
            enqueued: Vec::new(),
            trivial: 0,
            note: None,
        };
        match kind {
            StepKind::Value => self.value_step(&mut ev),
            StepKind::Domain => self.domain_step(&mut ev),
            StepKind::Closure => self.closure_step(&mut ev),
        }
        let fresh: Vec<RationalVector> = ev.adjoined.iter().flat_map(|a| [a.c.ray(), a.c.neg().ray()]).collect();
        if !fresh.is_empty() {
            self.sweep(&fresh, &mut ev);
        }
        self.enqueue_pairs(&fresh, &mut ev);
        self.trace.events.push(ev);
        self.stage += 1;
    }

    fn value_step(&mut self, ev: &mut StageEvent) {
        let m = self.values_assigned;
        let c = RationalVector::basis(Coordinate::Ext(m as u32));
        let em = self.enumeration[m];
        match self.hom.extend(&c, em, self.lattice.zero()) {
            Ok(h) => {
                self.hom = h;
                self.values_assigned += 1;
                ev.adjoined.push(Adjoined { c, plus: em, minus: self.lattice.zero() });
            }
            Err(e) => ev.note = Some(format!("value step failed: {e}")),
        }
    }

    /// Coordinates available to the vector enumeration, ascending.
    fn enumeration_coords(&self) -> Vec<Coordinate> {
        let mut out: Vec<Coordinate> = self.hom.base().coords().to_vec();
        out.extend((0..self.values_assigned).map(|m| Coordinate::Ext(m as u32)));
        out
    }

    fn next_domain_vector(&self) -> Option<RationalVector> {
        let coords = self.enumeration_coords();
        if !coords.iter().any(|c| matches!(c, Coordinate::Ext(_))) {
            return None;
        }
        let max_height = self.stage.max(1);
        let mut fracs = Vec::new();
        for h in 1..=max_height {
            // Only lower coordinates carry entries of height above one.
            if h > 1 && coords.len() < 2 {
                break;
            }
            fracs.extend(fractions_of_height(h as i64));
            fracs.sort();
            for (t, top) in coords.iter().enumerate() {
                if matches!(top, Coordinate::Ground(_)) {
                    continue;
                }
                let lower = &coords[..t];
                let mut idx = vec![0usize; lower.len()];
                loop {
                    let entries = idx.iter().map(|&i| &fracs[i]);
                    if entries.clone().any(|f| height_of(f) == h as i64) || h == 1 {
                        let v = RationalVector::from_entries(
                            lower.iter().cloned().zip(entries.cloned()).chain(std::iter::once((top.clone(), Scalar::one()))),
                        );
                        if !self.attempted.contains(&v) && self.hom.value_of(&v).is_none() {
                            return Some(v);
                        }
                    }
                    if !odometer(&mut idx, fracs.len()) {
                        break;
                    }
                }
            }
        }
        None
    }

    fn domain_step(&mut self, ev: &mut StageEvent) {
        let Some(c) = self.next_domain_vector() else {
            ev.note = Some("no vector left within the height bound".into());
            return;
        };
        self.attempted.insert(c.clone());
        let scan = match self.hom.candidate_pairs_ordered(&c, Availability::Lenient, &self.preference) {
            Ok(s) => s,
            Err(e) => {
                ev.note = Some(format!("domain step for {c} failed: {e}"));
                return;
            }
        };
        for (cp, cm) in scan.pairs {
            if let Ok(h) = self.hom.adjoin(&c, cp, cm) {
                self.hom = h;
                ev.adjoined.push(Adjoined { c, plus: cp, minus: cm });
                return;
            }
        }
        ev.note = Some(format!("no coherent candidate pair for {c}"));
    }

    fn closure_step(&mut self, ev: &mut StageEvent) {
        let Some(mut q) = self.queue.pop_front() else {
            ev.note = Some("no open obligation".into());
            return;
        };
        let ob = q.ob.clone();
        let outcome = match self.hom.advance_closedness(&ob.a, &ob.b, ob.e, &mut q.search, None) {
            Ok(Some(certificate)) => ClosureOutcome::Closed { certificate },
            _ => match self.hom.closure_step(&ob, &self.config.lambda_cap, &self.preference) {
                Ok(r) => {
                    self.hom = r.hom;
                    ev.adjoined.extend(r.adjoined);
                    ClosureOutcome::Lambda { lambda: r.lambda }
                }
                Err(e) => {
                    let requeued = q.retries == 0;
                    if requeued {
                        self.queue.push_back(Queued { retries: 1, ..q.clone() });
                    }
                    ClosureOutcome::Failed { reason: e.to_string(), requeued }
                }
            },
        };
        ev.closure = Some(ClosureRecord { id: q.id, obligation: q.ob.clone(), enqueued_at: q.enqueued_at, outcome });
    }

    /// Discharges every queued obligation that the grown map now certifies.
    fn sweep(&mut self, fresh: &[RationalVector], ev: &mut StageEvent) {
        let hom = &self.hom;
        self.queue.retain_mut(|q| match hom.advance_closedness(&q.ob.a, &q.ob.b, q.ob.e, &mut q.search, Some(fresh)) {
            Ok(Some(certificate)) => {
                ev.swept.push(SweepRecord { id: q.id, certificate });
                false
            }
            _ => true,
        });
    }

    /// Records one obligation per ordered generator pair involving `fresh`.
    fn enqueue_pairs(&mut self, fresh: &[RationalVector], ev: &mut StageEvent) {
        if fresh.is_empty() {
            return;
        }
        let l = self.lattice.clone();
        let fresh_set: BTreeSet<&RationalVector> = fresh.iter().collect();
        let gens: Vec<(RationalVector, Elem)> = self.hom.generators().iter().map(|(g, &x)| (g.clone(), x)).collect();
        let mut pairs = Vec::new();
        for (a, pa) in &gens {
            for (b, pb) in &gens {
                if a == b || !(fresh_set.contains(a) || fresh_set.contains(b)) {
                    continue;
                }
                pairs.push((a.clone(), *pa, b.clone(), *pb));
            }
        }
        for (a, pa, b, pb) in pairs {
            let e = l.residual(pa, pb);
            if l.leq(pa, e) {
                ev.trivial += 1;
                continue;
            }
            let ob = Obligation { a, b, e };
            let id = self.next_id;
            self.next_id += 1;
            let mut search = ClosednessSearch::default();
            match self.hom.advance_closedness(&ob.a, &ob.b, ob.e, &mut search, None) {
                Ok(Some(cert)) => ev.enqueued.push(EnqueueRecord { id, obligation: ob, discharged: Some(cert), ahead: None }),
                _ => {
                    let ahead = self.queue.len();
                    self.queue.push_back(Queued { id, ob: ob.clone(), enqueued_at: self.stage, retries: 0, search });
                    ev.enqueued.push(EnqueueRecord { id, obligation: ob, discharged: None, ahead: Some(ahead) });
                }
            }
        }
    }

    /// Replays the trace from scratch and checks the result matches this run.
    pub fn verify(&self) -> VerificationReport {
        let mut report = verify_trace(&self.trace);
        match replay_hom(&self.trace) {
            Ok(h) if h == self.hom => {}
            _ => report.problems.push("replayed map differs from the live run".into()),
        }
        report
    }
}

/// Reduced fractions `p/q` with `max(|p|, q) = h`.
fn fractions_of_height(h: i64) -> Vec<Scalar> {
    let mut out = Vec::new();
    for q in 1..=h {
        for p in -h..=h {
            let reduced = p.gcd(&q) == 1 || (p == 0 && q == 1);
            if reduced && p.abs().max(q) == h {
                out.push(Scalar::new(p.into(), q.into()));
            }
        }
    }
    out
}

fn height_of(x: &Scalar) -> i64 {
    let n: i64 = x.numer().abs().try_into().unwrap_or(i64::MAX);
    let d: i64 = x.denom().try_into().unwrap_or(i64::MAX);
    n.max(d)
}

/// Advances a mixed-radix counter, most significant digit first.
fn odometer(idx: &mut [usize], radix: usize) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < radix {
            return true;
        }
        idx[i] = 0;
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationCounts {
    pub enqueued: usize,
    pub trivial: usize,
    pub discharged_at_enqueue: usize,
    pub discharged_by_recheck: usize,
    pub discharged_by_sweep: usize,
    pub discharged_by_closure: usize,
    pub pending: usize,
    pub unresolved: usize,
}

impl ObligationCounts {
    pub fn discharged(&self) -> usize {
        self.discharged_at_enqueue + self.discharged_by_recheck + self.discharged_by_sweep + self.discharged_by_closure
    }
}

/// Share of obligations enqueued up to `horizon` that were discharged by the end.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub horizon: usize,
    pub considered: usize,
    pub discharged: usize,
    pub ratio: f64,
}

/// Waiting times of dequeued obligations against the schedule bound.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fairness {
    pub dequeued: usize,
    pub max_wait: usize,
    pub bound_violations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub stages: usize,
    pub lattice_size: usize,
    /// Labels of the image, in lattice order.
    pub hit: Vec<String>,
    pub surjective: bool,
    pub values_assigned: usize,
    /// `φ⟦δ_m⟧ = e_m` and `φ⟦−δ_m⟧ = 0` for every assigned value.
    pub values_exact: bool,
    pub generators: usize,
    pub coherent: bool,
    pub certificates_checked: usize,
    pub certificates_failed: usize,
    pub closure_postconditions_failed: usize,
    pub obligations: ObligationCounts,
    pub health: Health,
    pub fairness: Fairness,
    pub problems: Vec<String>,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
            && self.coherent
            && self.values_exact
            && self.certificates_failed == 0
            && self.closure_postconditions_failed == 0
    }
}

/// Rebuilds the final map from a trace, re-checking coherence at each adjoin.
pub fn replay_hom(trace: &Trace) -> Result<PartialHom, String> {
    let (lattice, base) = header_parts(&trace.header)?;
    let mut hom = PartialHom::new(lattice, Arc::new(base));
    for ev in &trace.events {
        for a in &ev.adjoined {
            hom = hom.adjoin(&a.c, a.plus, a.minus).map_err(|e| format!("stage {}: {e}", ev.stage))?;
        }
    }
    Ok(hom)
}

fn header_parts(h: &TraceHeader) -> Result<(Arc<FiniteLattice>, BaseHom), String> {
    let lattice = Arc::new(h.lattice.to_lattice().map_err(|e| e.to_string())?);
    let base = h.base.to_base(&lattice).map_err(|e| e.to_string())?;
    Ok((lattice, base))
}

/// The stage of the `(ahead+1)`-th explicit CLOSURE slot after `from`.
fn fairness_deadline(schedule: &[StepKind], from: usize, ahead: usize) -> usize {
    let mut need = ahead + 1;
    let mut s = from;
    while need > 0 {
        s += 1;
        if schedule[s % schedule.len()] == StepKind::Closure {
            need -= 1;
        }
    }
    s
}

/// Checks `ψ⟦a−λb⟧ ≤ ψ⟦−b⟧ ∨ e` and `⟦a⟧ ⊆ ⟦b⟧ ∪ (⟦a⟧ ∩ ⟦a−λb⟧)`.
pub fn verify_lambda_certificate(hom: &PartialHom, ob: &Obligation, lambda: &Scalar) -> bool {
    let l = hom.target();
    let v = ob.a.sub(&ob.b.scale(lambda));
    let (Ok(pv), Ok(pnb), Ok(pa), Ok(pb)) =
        (hom.eval_literal(&v), hom.eval_literal(&ob.b.neg()), hom.eval_literal(&ob.a), hom.eval_literal(&ob.b))
    else {
        return false;
    };
    if !lambda.is_positive() || !l.leq(pv, l.join(pnb, ob.e)) || !l.leq(pa, l.join(pb, ob.e)) {
        return false;
    }
    let u = Term::clause(&[ob.a.clone(), v]);
    let rhs = Term::literal(ob.b.clone()).join(&u);
    let contained = Term::literal(ob.a.clone()).leq_bool(&rhs).unwrap_or(false);
    contained && matches!(hom.eval(&u), Ok(x) if l.leq(x, ob.e))
}

/// Replays a trace and recomputes every reported quantity from it.
pub fn verify_trace(trace: &Trace) -> VerificationReport {
    let mut r = VerificationReport::default();
    let (lattice, base) = match header_parts(&trace.header) {
        Ok(p) => p,
        Err(e) => {
            r.problems.push(format!("header: {e}"));
            return r;
        }
    };
    let config = match trace.header.config.to_config() {
        Ok(c) => c,
        Err(e) => {
            r.problems.push(format!("config: {e}"));
            return r;
        }
    };
    let enumeration: Vec<Elem> = match trace.header.enumeration.iter().map(|s| lattice.index_of(s)).collect() {
        Ok(v) => v,
        Err(e) => {
            r.problems.push(format!("enumeration: {e}"));
            return r;
        }
    };
    let l = lattice.clone();
    r.lattice_size = l.len();
    r.stages = trace.events.len();
    let horizon = config.stages / 2;
    r.health.horizon = horizon;

    let mut hom = PartialHom::new(lattice.clone(), Arc::new(base));
    let mut enqueued_at: BTreeMap<usize, (usize, Option<usize>, Obligation)> = BTreeMap::new();
    let mut discharged: BTreeSet<usize> = BTreeSet::new();
    let mut unresolved: BTreeSet<usize> = BTreeSet::new();
    let mut issued: Vec<(Obligation, Issued)> = Vec::new();
    let mut values = 0usize;

    for (i, ev) in trace.events.iter().enumerate() {
        if ev.stage != i {
            r.problems.push(format!("event {i} carries stage {}", ev.stage));
        }
        for a in &ev.adjoined {
            if ev.kind == StepKind::Value {
                let expect = RationalVector::basis(Coordinate::Ext(values as u32));
                if a.c != expect || enumeration.get(values) != Some(&a.plus) || a.minus != l.zero() {
                    r.problems.push(format!("stage {i}: value step does not assign e_{values}"));
                }
                values += 1;
            }
            match hom.adjoin(&a.c, a.plus, a.minus) {
                Ok(h) => hom = h,
                Err(e) => r.problems.push(format!("stage {i}: {e}")),
            }
        }
        if let Some(c) = &ev.closure {
            match enqueued_at.get(&c.id) {
                Some((_, _, ob)) if *ob == c.obligation => {}
                _ => r.problems.push(format!("stage {i}: closure of unknown obligation {}", c.id)),
            }
            r.fairness.dequeued += 1;
            let wait = i.saturating_sub(c.enqueued_at);
            r.fairness.max_wait = r.fairness.max_wait.max(wait);
            if let Some((at, Some(ahead), _)) = enqueued_at.get(&c.id) {
                if !unresolved.contains(&c.id) && i > fairness_deadline(&config.schedule, *at, *ahead) {
                    r.fairness.bound_violations += 1;
                }
            }
            let ob = &c.obligation;
            match &c.outcome {
                ClosureOutcome::Closed { certificate } => {
                    r.certificates_checked += 1;
                    if !hom.verify_finite_closedness(&ob.a, &ob.b, ob.e, certificate) {
                        r.certificates_failed += 1;
                    }
                    discharged.insert(c.id);
                    r.obligations.discharged_by_recheck += 1;
                    issued.push((ob.clone(), Issued::Finite(certificate.clone())));
                }
                ClosureOutcome::Lambda { lambda } => {
                    r.certificates_checked += 1;
                    if !verify_lambda_certificate(&hom, ob, lambda) {
                        r.closure_postconditions_failed += 1;
                    }
                    discharged.insert(c.id);
                    r.obligations.discharged_by_closure += 1;
                    issued.push((ob.clone(), Issued::Lambda(lambda.clone())));
                }
                ClosureOutcome::Failed { requeued, .. } => {
                    // A requeued obligation restarts its wait from here.
                    if *requeued {
                        unresolved.insert(c.id);
                    } else {
                        r.obligations.unresolved += 1;
                    }
                }
            }
        }
        for sw in &ev.swept {
            match enqueued_at.get(&sw.id) {
                Some((_, _, ob)) if !discharged.contains(&sw.id) => {
                    let ob = ob.clone();
                    r.certificates_checked += 1;
                    if !hom.verify_finite_closedness(&ob.a, &ob.b, ob.e, &sw.certificate) {
                        r.certificates_failed += 1;
                    }
                    discharged.insert(sw.id);
                    r.obligations.discharged_by_sweep += 1;
                    issued.push((ob, Issued::Finite(sw.certificate.clone())));
                }
                _ => r.problems.push(format!("stage {i}: sweep of unknown obligation {}", sw.id)),
            }
        }
        r.obligations.trivial += ev.trivial;
        for e in &ev.enqueued {
            r.obligations.enqueued += 1;
            let ob = &e.obligation;
            let valid = match (hom.eval_literal(&ob.a), hom.eval_literal(&ob.b)) {
                (Ok(pa), Ok(pb)) => l.residual(pa, pb) == ob.e && !l.leq(pa, ob.e),
                _ => false,
            };
            if !valid {
                r.problems.push(format!("stage {i}: obligation {} is not a residual pair", e.id));
            }
            enqueued_at.insert(e.id, (i, e.ahead, ob.clone()));
            if let Some(cert) = &e.discharged {
                r.certificates_checked += 1;
                if !hom.verify_finite_closedness(&ob.a, &ob.b, ob.e, cert) {
                    r.certificates_failed += 1;
                }
                discharged.insert(e.id);
                r.obligations.discharged_at_enqueue += 1;
                issued.push((ob.clone(), Issued::Finite(cert.clone())));
            }
        }
    }

    // Certificates must survive to the final map.
    for (ob, cert) in &issued {
        let ok = match cert {
            Issued::Finite(c) => hom.verify_finite_closedness(&ob.a, &ob.b, ob.e, c),
            Issued::Lambda(lam) => verify_lambda_certificate(&hom, ob, lam),
        };
        if !ok {
            r.problems.push("a certificate does not hold for the final map".into());
            break;
        }
    }

    r.obligations.pending = enqueued_at.len() - discharged.len() - r.obligations.unresolved;
    let considered: Vec<usize> = enqueued_at.iter().filter(|(_, (at, _, _))| *at <= horizon).map(|(id, _)| *id).collect();
    r.health.considered = considered.len();
    r.health.discharged = considered.iter().filter(|id| discharged.contains(id)).count();
    r.health.ratio = if considered.is_empty() { 1.0 } else { r.health.discharged as f64 / considered.len() as f64 };

    r.values_assigned = values;
    r.values_exact = (0..values).all(|m| {
        let d = RationalVector::basis(Coordinate::Ext(m as u32));
        hom.eval_literal(&d).ok() == Some(enumeration[m]) && hom.eval_literal(&d.neg()).ok() == Some(l.zero())
    });
    let range = hom.range();
    r.hit = range.iter().map(|&x| l.label(x).to_string()).collect();
    r.surjective = range.len() == l.len();
    r.generators = hom.len();
    r.coherent = match hom.coherence() {
        crate::hom::Coherence::Coherent(points) => hom.verify_coherence_points(&points),
        _ => false,
    };
    r
}

enum Issued {
    Finite(FiniteClosedness),
    Lambda(Scalar),
}

/// Convenience wrapper: build, run the full budget, and return the state.
pub fn construct(lattice: Arc<FiniteLattice>, base: BaseHom, config: ConstructionConfig) -> Result<ConstructionState, LatticeError> {
    let mut st = ConstructionState::new(lattice, None, base, config)?;
    st.run();
    Ok(st)
}
