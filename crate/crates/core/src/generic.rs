//! Deterministic generic runs: increasing multisystem chains driven by an
//! explicit list of dense-set requirements, fusion trees read off the chain,
//! staged family iteration, and the orbit/symmetry checks on the extracted
//! point.
//!
//! A requirement names a dense set of multisystems together with a selector
//! that moves any multisystem into the set by extending it. A run meets each
//! listed requirement in order, interleaving plain proper extensions per the
//! schedule; genericity here means exactly: the recorded chain met every
//! listed requirement. Everything is deterministic and replayable from the
//! log.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::names::{avoidance_witness, df_notin, ka_step, FilterChain, NameError, RealName};
use crate::points::LazyPoint;
use crate::strings::{xor_pad, xor_strings, BitString};
use crate::systems::{
    Ambient, Certificate, FusionAnswer, FusionChain, MultiSystem, SplitSystem, SystemError,
};
use crate::trees::{SilverPattern, Slot, TreeError, TruncatedTree};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("requirement {0:?} cannot extend the current multisystem: {1}")]
    RequirementStuck(String, String),
    #[error("stage budget {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error("cover set is not pre-dense in the fragment")]
    NotPredense,
    #[error("filter chain stems do not strictly grow at entry {entry}")]
    StemsStalled { entry: usize },
    #[error("the run never met the requirement: {0}")]
    RequirementNotMet(String),
    #[error("verified postcondition failed: {0}")]
    VerificationFailed(String),
    #[error("script error: {0}")]
    Script(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Name(#[from] NameError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// The declared tree family a run works over: an ambient membership
/// predicate plus an explicit member list used as the search pool.
#[derive(Clone, Debug)]
pub struct Fragment {
    pub ambient: Ambient,
    pub members: Vec<SilverPattern>,
}

impl Fragment {
    /// The unrestricted family of all pattern trees.
    pub fn unrestricted() -> Self {
        Fragment {
            ambient: Ambient::All,
            members: vec![SilverPattern::full()],
        }
    }

    pub fn with_members(members: Vec<SilverPattern>) -> Self {
        Fragment {
            ambient: Ambient::All,
            members,
        }
    }

    pub fn contains(&self, t: &SilverPattern) -> bool {
        self.ambient.contains(t)
    }

    /// Pre-density of `d` in the fragment. Over the unrestricted ambient
    /// family this is decided exactly: every tree is compatible with some
    /// member of `d` iff `d` covers the full tree.
    pub fn predense(&self, d: &[SilverPattern]) -> bool {
        match &self.ambient {
            Ambient::All => SilverPattern::full().subset_of_union(d),
            Ambient::Explicit(set) => set
                .iter()
                .all(|t| d.iter().any(|s| t.intersect(s).is_some())),
        }
    }
}

/// A dense-set requirement: the selector realizes the set by extending any
/// given multisystem into it.
pub enum Requirement {
    /// All coordinates up to `k` present with height at least `max(k, 1)`.
    Height(usize),
    /// Some coordinate is rooted at the given tree.
    Root(SilverPattern),
    /// Every supported top layer reduced below members of every translate of
    /// the cover set, so the derived fusion family is finitely covered.
    Cover(Vec<SilverPattern>),
    /// The avoidance condition for a real name between two coordinates.
    AvoidName {
        name: RealName,
        avoided: usize,
        carrier: usize,
        base_index: BitString,
    },
    /// Caller-supplied dense set; the selector output must extend its input.
    Custom {
        label: String,
        #[allow(clippy::type_complexity)]
        selector: Box<dyn Fn(&MultiSystem, &Fragment) -> Result<MultiSystem, RunError>>,
    },
}

impl Requirement {
    pub fn label(&self) -> String {
        match self {
            Requirement::Height(k) => format!("height {k}"),
            Requirement::Root(t) => format!("root \"{t}\""),
            Requirement::Cover(d) => {
                let items: Vec<String> = d.iter().map(|p| format!("\"{p}\"")).collect();
                format!("cover {}", items.join(" "))
            }
            Requirement::AvoidName {
                avoided,
                carrier,
                base_index,
                ..
            } => format!("avoid {avoided} {carrier} \"{base_index}\""),
            Requirement::Custom { label, .. } => format!("custom {label}"),
        }
    }
}

/// Scheduling knobs for a run.
#[derive(Clone, Copy, Debug)]
pub struct Schedule {
    /// Proper-extension stages inserted before each requirement hit.
    pub extends_between: usize,
    /// Proper-extension stages appended after the last requirement.
    pub trailing_extends: usize,
    /// Depth used for derived families, cover translates and truncations.
    pub truncation_depth: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            extends_between: 1,
            trailing_extends: 0,
            truncation_depth: 6,
        }
    }
}

pub const DEFAULT_STAGE_BUDGET: usize = 32;

/// One entry of the run log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunEvent {
    pub stage: usize,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    Init,
    Extend,
    Met(String),
}

/// Matching data for an avoidance requirement that was met.
#[derive(Clone, Debug)]
pub struct AvoidRecord {
    pub name: RealName,
    pub avoided: usize,
    pub carrier: usize,
    pub base_index: BitString,
    pub stage: usize,
}

/// A finished generic run: the increasing chain, the log, the stabilized
/// tree table, and the data needed to read fusion trees off the chain.
pub struct GenericRun {
    fragment: Fragment,
    chain: Arc<FusionChain>,
    log: Vec<RunEvent>,
    avoid_records: Vec<AvoidRecord>,
    schedule: Schedule,
}

impl GenericRun {
    pub fn fragment(&self) -> &Fragment {
        &self.fragment
    }

    pub fn chain(&self) -> &FusionChain {
        &self.chain
    }

    pub fn stages(&self) -> &[MultiSystem] {
        self.chain.stages()
    }

    pub fn final_stage(&self) -> &MultiSystem {
        self.chain.last()
    }

    pub fn log(&self) -> &[RunEvent] {
        &self.log
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    pub fn requirement_met(&self, label: &str) -> bool {
        self.log
            .iter()
            .any(|e| matches!(&e.kind, EventKind::Met(l) if l == label))
    }

    /// The stabilized tree at coordinate `k`, index `s`: its value at the
    /// first stage tall enough to define it, which no later stage of the
    /// increasing chain may change.
    pub fn tx(&self, k: usize, s: &BitString) -> Option<&SilverPattern> {
        for stage in self.chain.stages() {
            if let Some(sys) = stage.get(k) {
                if sys.height() > s.len() {
                    return sys.get(s);
                }
            }
        }
        None
    }

    /// The whole stabilized table, read from the final stage.
    pub fn tx_table(&self) -> Vec<(usize, BitString, SilverPattern)> {
        let last = self.final_stage();
        let mut out = Vec::new();
        for k in last.support() {
            let sys = last.get(k).unwrap();
            for (s, t) in sys.table() {
                out.push((k, s.clone(), t.clone()));
            }
        }
        out
    }

    /// The fusion tree below coordinate `k`, index `s`.
    pub fn u_tree(&self, k: usize, s: &BitString) -> Result<FusionTree, RunError> {
        let sys = self
            .final_stage()
            .get(k)
            .ok_or(SystemError::CoordinateAbsent(k))?;
        if sys.height() <= s.len() {
            return Err(RunError::System(SystemError::InsufficientStages {
                needed: s.len() + 1,
                have: sys.height(),
            }));
        }
        Ok(FusionTree {
            chain: Arc::clone(&self.chain),
            coord: k,
            index: s.clone(),
            sigma: BitString::empty(),
            window: None,
        })
    }

    /// The derived family: every translate of every fusion tree with index
    /// and acting string up to `depth`, deduplicated by depth-`depth`
    /// pattern.
    pub fn u_family(&self, depth: usize) -> Result<Vec<FusionTree>, RunError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for k in self.final_stage().support() {
            let height = self.final_stage().height_at(k);
            for s in BitString::all_up_to(depth.min(height - 1)) {
                let base = self.u_tree(k, &s)?;
                for sigma in BitString::all_up_to(depth) {
                    let tree = base.acted(&sigma);
                    let pattern = tree.pattern_to(depth)?;
                    if seen.insert(pattern) {
                        out.push(tree);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The derived family as depth-`depth` patterns, sorted.
    pub fn family_patterns(&self, depth: usize) -> Result<Vec<SilverPattern>, RunError> {
        let mut set = BTreeSet::new();
        for tree in self.u_family(depth)? {
            set.insert(tree.pattern_to(depth)?);
        }
        Ok(set.into_iter().collect())
    }

    /// Structured-text log, byte-stable across identical runs.
    pub fn export_log(&self) -> String {
        let mut out = String::from("run\n");
        for e in &self.log {
            match &e.kind {
                EventKind::Init => out.push_str(&format!("stage {} init\n", e.stage)),
                EventKind::Extend => out.push_str(&format!("stage {} extend\n", e.stage)),
                EventKind::Met(label) => {
                    out.push_str(&format!("stage {} met \"{}\"\n", e.stage, label))
                }
            }
        }
        for (k, s, t) in self.tx_table() {
            out.push_str(&format!("tx {k} \"{s}\" \"{t}\"\n"));
        }
        out.push_str("end\n");
        out
    }
}

impl fmt::Debug for GenericRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericRun")
            .field("stages", &self.chain.stages().len())
            .field("log", &self.log)
            .finish()
    }
}

/// Runs the chain: meets every requirement in order, interleaving proper
/// extensions per the schedule, within the stage budget.
pub fn run_generic(
    fragment: Fragment,
    requirements: Vec<Requirement>,
    schedule: Schedule,
    stage_budget: usize,
) -> Result<GenericRun, RunError> {
    let mut chain = FusionChain::new(MultiSystem::empty());
    let mut log = vec![RunEvent {
        stage: 0,
        kind: EventKind::Init,
    }];
    let mut avoid_records = Vec::new();

    fn push_stage(
        chain: &mut FusionChain,
        log: &mut Vec<RunEvent>,
        budget: usize,
        stage: MultiSystem,
        kind: EventKind,
    ) -> Result<(), RunError> {
        if chain.stages().len() >= budget {
            return Err(RunError::BudgetExhausted { budget });
        }
        chain.push(stage)?;
        log.push(RunEvent {
            stage: chain.stages().len() - 1,
            kind,
        });
        Ok(())
    }

    for req in &requirements {
        let current = chain.last().clone();
        let extended = apply_requirement(req, &current, &fragment, &schedule)?;
        let label = req.label();
        if !extended.extends(&current) {
            return Err(RunError::RequirementStuck(
                label,
                "selector output does not extend its input".into(),
            ));
        }
        if extended == current {
            log.push(RunEvent {
                stage: chain.stages().len() - 1,
                kind: EventKind::Met(label),
            });
        } else {
            push_stage(
                &mut chain,
                &mut log,
                stage_budget,
                extended,
                EventKind::Met(label),
            )?;
        }
        if let Requirement::AvoidName {
            name,
            avoided,
            carrier,
            base_index,
        } = req
        {
            avoid_records.push(AvoidRecord {
                name: name.clone(),
                avoided: *avoided,
                carrier: *carrier,
                base_index: base_index.clone(),
                stage: chain.stages().len() - 1,
            });
        }
        for _ in 0..schedule.extends_between {
            if chain.last().support().is_empty() {
                break; // nothing to extend yet
            }
            let next = chain.last().proper_extension();
            push_stage(&mut chain, &mut log, stage_budget, next, EventKind::Extend)?;
        }
    }
    for _ in 0..schedule.trailing_extends {
        if chain.last().support().is_empty() {
            break;
        }
        let next = chain.last().proper_extension();
        push_stage(&mut chain, &mut log, stage_budget, next, EventKind::Extend)?;
    }

    Ok(GenericRun {
        fragment,
        chain: Arc::new(chain),
        log,
        avoid_records,
        schedule,
    })
}

fn apply_requirement(
    req: &Requirement,
    current: &MultiSystem,
    fragment: &Fragment,
    schedule: &Schedule,
) -> Result<MultiSystem, RunError> {
    match req {
        Requirement::Height(k) => {
            let target = (*k).max(1);
            let mut cur = current.clone();
            for coord in 0..=*k {
                let mut sys = match cur.get(coord) {
                    Some(sys) => sys.clone(),
                    None => SplitSystem::seed(SilverPattern::full()),
                };
                while sys.height() < target {
                    sys = sys.extend();
                }
                cur = cur.with_coord(coord, sys);
            }
            Ok(cur)
        }
        Requirement::Root(tree) => {
            let rooted = current.support().into_iter().any(|k| {
                current.get(k).and_then(|sys| sys.get(&BitString::empty())) == Some(tree)
            });
            if rooted {
                return Ok(current.clone());
            }
            let fresh = (0..).find(|k| current.get(*k).is_none()).unwrap();
            Ok(current.with_coord(fresh, SplitSystem::seed(tree.clone())))
        }
        Requirement::Cover(d) => {
            if !fragment.predense(d) {
                return Err(RunError::NotPredense);
            }
            let depth = schedule.truncation_depth;
            let translates: Vec<Vec<SilverPattern>> = BitString::all_up_to(depth)
                .iter()
                .map(|sigma| d.iter().map(|s| s.act(sigma)).collect())
                .collect();
            let mut cur = current.proper_extension();
            for k in cur.support() {
                let mut sys = cur.get(k).unwrap().clone();
                for v in BitString::all_of_length(sys.height() - 1) {
                    let mut r = sys.tree(&v).clone();
                    for td in &translates {
                        if td.iter().any(|s| r.is_subset(s)) {
                            continue;
                        }
                        match td.iter().find_map(|s| r.intersect(s)) {
                            Some(meet) => r = meet,
                            None => {
                                return Err(RunError::RequirementStuck(
                                    req.label(),
                                    format!("no cover member compatible below {r}"),
                                ))
                            }
                        }
                    }
                    sys = sys.reduce_at(&v, &r)?;
                }
                cur = cur.with_coord(k, sys);
            }
            Ok(cur)
        }
        Requirement::AvoidName {
            name,
            avoided,
            carrier,
            base_index,
        } => {
            let mut cur = current.clone();
            for coord in [*avoided, *carrier] {
                if cur.get(coord).is_none() {
                    cur = cur.with_coord(coord, SplitSystem::seed(SilverPattern::full()));
                }
            }
            while cur.height_at(*carrier) <= base_index.len() {
                let sys = cur.get(*carrier).unwrap().extend();
                cur = cur.with_coord(*carrier, sys);
            }
            Ok(ka_step(
                &cur,
                *avoided,
                *carrier,
                base_index,
                name,
                &fragment.members,
            )?)
        }
        Requirement::Custom { selector, label } => {
            let out = selector(current, fragment)?;
            if !out.extends(current) {
                return Err(RunError::RequirementStuck(
                    label.clone(),
                    "selector output does not extend its input".into(),
                ));
            }
            Ok(out)
        }
    }
}

/// A lazily evaluated fusion tree: a coordinate and index into a chain, an
/// applied acting string, and an optional restriction node. Action and
/// restriction compose symbolically; membership and truncations are read off
/// the chain with stability certificates.
#[derive(Clone)]
pub struct FusionTree {
    chain: Arc<FusionChain>,
    coord: usize,
    index: BitString,
    sigma: BitString,
    window: Option<BitString>,
}

impl FusionTree {
    pub fn coord(&self) -> usize {
        self.coord
    }

    pub fn index(&self) -> &BitString {
        &self.index
    }

    pub fn sigma(&self) -> &BitString {
        &self.sigma
    }

    pub fn descriptor(&self) -> String {
        let mut out = format!("U[{}](\"{}\")", self.coord, self.index);
        if !self.sigma.is_empty() {
            out = format!("{} . {out}", self.sigma);
        }
        if let Some(u) = &self.window {
            out = format!("{out} | \"{u}\"");
        }
        out
    }

    /// Membership of `t`, with the certificate of the underlying chain.
    pub fn member(&self, t: &BitString) -> Result<FusionAnswer, RunError> {
        if let Some(u) = &self.window {
            if !t.comparable(u) {
                return Ok(FusionAnswer {
                    member: false,
                    certificate: Certificate::Stable,
                });
            }
        }
        let acted = xor_strings(&self.sigma, t);
        Ok(self.chain.fusion_member(self.coord, &self.index, &acted)?)
    }

    /// The tree as a pattern valid to depth `d`.
    pub fn pattern_to(&self, d: usize) -> Result<SilverPattern, RunError> {
        let base = self.chain.fusion_pattern(self.coord, &self.index, d)?;
        let acted = base.act(&self.sigma);
        match &self.window {
            Some(u) => Ok(acted.restrict(u)?),
            None => Ok(acted),
        }
    }

    /// Member-by-member window to depth `d`; every answer must be stable.
    pub fn truncate(&self, d: usize) -> Result<TruncatedTree, RunError> {
        let mut nodes = BTreeSet::new();
        for t in BitString::all_up_to(d) {
            let ans = self.member(&t)?;
            if ans.certificate == Certificate::Provisional {
                let have = self
                    .chain
                    .last()
                    .get(self.coord)
                    .map_or(0, SplitSystem::top_stem_len);
                return Err(RunError::System(SystemError::InsufficientStages {
                    needed: d,
                    have,
                }));
            }
            if ans.member {
                nodes.insert(t);
            }
        }
        Ok(TruncatedTree::from_parts(d, nodes))
    }

    /// Composes a further acting string.
    pub fn acted(&self, sigma: &BitString) -> FusionTree {
        FusionTree {
            chain: Arc::clone(&self.chain),
            coord: self.coord,
            index: self.index.clone(),
            sigma: xor_pad(sigma, &self.sigma),
            window: self.window.as_ref().map(|u| xor_strings(sigma, u)),
        }
    }

    /// Composes a restriction at `u`, which must be a member node comparable
    /// with any existing restriction.
    pub fn restricted(&self, u: &BitString) -> Result<FusionTree, RunError> {
        if !self.member(u)?.member {
            return Err(RunError::Tree(TreeError::NodeNotInTree {
                node: u.clone(),
                pattern: self.descriptor(),
            }));
        }
        let window = match &self.window {
            None => u.clone(),
            Some(old) if old.is_prefix_of(u) => u.clone(),
            Some(old) if u.is_prefix_of(old) => old.clone(),
            Some(_) => {
                return Err(RunError::Tree(TreeError::NodeNotInTree {
                    node: u.clone(),
                    pattern: self.descriptor(),
                }))
            }
        };
        Ok(FusionTree {
            chain: Arc::clone(&self.chain),
            coord: self.coord,
            index: self.index.clone(),
            sigma: self.sigma.clone(),
            window: Some(window),
        })
    }
}

impl fmt::Debug for FusionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.descriptor())
    }
}

/// Density of the derived family below `tree`: true iff some family member's
/// truncation pattern is a subtree of it.
pub fn check_density_u(run: &GenericRun, tree: &SilverPattern) -> Result<bool, RunError> {
    let depth = run.schedule.truncation_depth.max(tree.len());
    let family = run.family_patterns(depth)?;
    Ok(family.iter().any(|u| u.is_subset(tree)))
}

/// Per-member cover report against a pre-dense set.
#[derive(Clone, Debug)]
pub struct CoverReport {
    pub entries: Vec<CoverEntry>,
    pub predense_in_extended: bool,
}

#[derive(Clone, Debug)]
pub struct CoverEntry {
    pub member: SilverPattern,
    pub witness: Option<Vec<usize>>,
}

impl CoverReport {
    pub fn all_covered(&self) -> bool {
        self.entries.iter().all(|e| e.witness.is_some())
    }
}

/// Checks that every derived family member is covered by a finite subfamily
/// of `d`, returning the witnesses, and re-verifies pre-density of `d` in
/// the fragment together with the family.
pub fn check_finite_cover(run: &GenericRun, d: &[SilverPattern]) -> Result<CoverReport, RunError> {
    if !run.fragment.predense(d) {
        return Err(RunError::NotPredense);
    }
    let depth = run.schedule.truncation_depth;
    let family = run.family_patterns(depth)?;
    let entries = family
        .iter()
        .map(|u| CoverEntry {
            member: u.clone(),
            witness: u.cover_witness(d),
        })
        .collect();
    let predense_in_extended = family
        .iter()
        .all(|u| d.iter().any(|s| u.intersect(s).is_some()));
    Ok(CoverReport {
        entries,
        predense_in_extended,
    })
}

/// Configuration of the staged iteration.
#[derive(Clone, Debug)]
pub struct JensenConfig {
    pub stages: usize,
    /// Base-layer patterns are enumerated up to this length.
    pub base_length_bound: usize,
    pub depth: usize,
    pub budget: usize,
    /// How many base members get a root requirement per stage.
    pub roots_per_stage: usize,
    /// Cover sets checked at every stage and re-checked at the end.
    pub covers: Vec<Vec<SilverPattern>>,
}

impl Default for JensenConfig {
    fn default() -> Self {
        JensenConfig {
            stages: 2,
            base_length_bound: 2,
            depth: 4,
            budget: DEFAULT_STAGE_BUDGET,
            roots_per_stage: 2,
            covers: vec![vec!["0".parse().unwrap(), "1".parse().unwrap()]],
        }
    }
}

#[derive(Clone, Debug)]
pub struct JensenStageReport {
    pub stage: usize,
    pub family_size: usize,
    /// Root tree and whether some family member sits below it.
    pub density_hits: Vec<(SilverPattern, bool)>,
    /// Cover-set index and whether every family member was finitely covered.
    pub covers_ok: Vec<(usize, bool)>,
}

#[derive(Clone, Debug)]
pub struct JensenReport {
    /// Member counts of the layers, base first.
    pub layer_sizes: Vec<usize>,
    pub stage_reports: Vec<JensenStageReport>,
    /// Cover-set index and whether it stayed pre-dense in the final layer.
    pub predense_recheck: Vec<(usize, bool)>,
}

/// All canonical patterns of length at most `bound`, the base layer of the
/// staged iteration.
pub fn enumerate_patterns(bound: usize) -> Vec<SilverPattern> {
    let mut out = BTreeSet::new();
    out.insert(SilverPattern::full());
    let mut level: Vec<Vec<Slot>> = vec![Vec::new()];
    for _ in 0..bound {
        let mut next = Vec::new();
        for word in &level {
            for slot in [Slot::Fixed(false), Slot::Fixed(true), Slot::Free] {
                let mut w = word.clone();
                w.push(slot);
                next.push(w);
            }
        }
        for w in &next {
            out.insert(SilverPattern::new(w.clone()));
        }
        level = next;
    }
    out.into_iter().collect()
}

/// Staged iteration: each stage runs a generic run over the current layer
/// and appends the derived family; density and cover reports are emitted per
/// stage, and the cover sets are re-verified pre-dense at the end.
pub fn jensen_iterate(config: &JensenConfig) -> Result<JensenReport, RunError> {
    let mut layer = enumerate_patterns(config.base_length_bound);
    let mut layer_sizes = vec![layer.len()];
    let mut stage_reports = Vec::new();

    for stage in 0..config.stages {
        let fragment = Fragment::with_members(layer.clone());
        let mut requirements = vec![Requirement::Height(1)];
        let roots: Vec<SilverPattern> = layer
            .iter()
            .filter(|t| !t.is_full())
            .take(config.roots_per_stage)
            .cloned()
            .collect();
        for t in &roots {
            requirements.push(Requirement::Root(t.clone()));
        }
        for d in &config.covers {
            requirements.push(Requirement::Cover(d.clone()));
        }
        let schedule = Schedule {
            extends_between: 1,
            trailing_extends: config.depth + 1,
            truncation_depth: config.depth,
        };
        let run = run_generic(fragment, requirements, schedule, config.budget)?;
        let family = run.family_patterns(config.depth)?;

        let mut density_hits = Vec::new();
        for t in &roots {
            density_hits.push((t.clone(), check_density_u(&run, t)?));
        }
        let mut covers_ok = Vec::new();
        for (i, d) in config.covers.iter().enumerate() {
            let report = check_finite_cover(&run, d)?;
            covers_ok.push((i, report.all_covered() && report.predense_in_extended));
        }
        stage_reports.push(JensenStageReport {
            stage,
            family_size: family.len(),
            density_hits,
            covers_ok,
        });

        let mut merged: BTreeSet<SilverPattern> = layer.into_iter().collect();
        merged.extend(family);
        layer = merged.into_iter().collect();
        layer_sizes.push(layer.len());
    }

    let predense_recheck = config
        .covers
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let ok = layer
                .iter()
                .all(|t| d.iter().any(|s| t.intersect(s).is_some()));
            (i, ok)
        })
        .collect();

    Ok(JensenReport {
        layer_sizes,
        stage_reports,
        predense_recheck,
    })
}

/// The defined prefix of the point a descending chain pins down: the union
/// of the stems, which must strictly grow along the chain.
pub fn generic_point(chain: &FilterChain) -> Result<BitString, RunError> {
    let stems: Vec<BitString> = chain.entries().iter().map(SilverPattern::stem).collect();
    for (i, pair) in stems.windows(2).enumerate() {
        if !(pair[0].len() < pair[1].len() && pair[0].is_prefix_of(&pair[1])) {
            return Err(RunError::StemsStalled { entry: i + 1 });
        }
    }
    Ok(stems.last().cloned().unwrap_or_default())
}

/// Membership in the intersection of the staged family unions, decided at
/// depth `d`: the point's length-`d` prefix must be a node of some member of
/// every per-stage family.
pub fn mod1_membership(x: &LazyPoint, families: &[Vec<SilverPattern>], d: usize) -> bool {
    let prefix = x
        .prefix_to(d)
        .expect("mod1_membership needs the point decided to the checked depth");
    families
        .iter()
        .all(|family| family.iter().any(|u| u.contains(&prefix)))
}

/// The flip that fixes a tree setwise while moving every branch: all zeros
/// along the stem, then a single one at the first free position.
pub fn flip_symmetry(tree: &SilverPattern) -> BitString {
    let mut bits = vec![false; tree.stem().len()];
    bits.push(true);
    BitString::from_bits(bits)
}

/// Outcome of the end-to-end avoidance search.
#[derive(Debug)]
pub struct TheoremKOutcome {
    pub tree: FusionTree,
    pub witness_index: BitString,
    pub stage: usize,
    pub forced_out: BitString,
    pub checked_depth: usize,
}

/// Finds, in a finished run, the fusion tree below the carrier that directly
/// forces the name out of the (possibly acted) fusion tree of the avoided
/// coordinate, and verifies both the subtree claim and the avoidance
/// predicate at the stabilized depth.
pub fn theorem_k_search(
    run: &GenericRun,
    name: &RealName,
    avoided: usize,
    carrier: usize,
    base_index: &BitString,
    sigma: &BitString,
) -> Result<TheoremKOutcome, RunError> {
    let shifted = name.shift(sigma);
    let record = run
        .avoid_records
        .iter()
        .find(|r| {
            r.name == shifted
                && r.avoided == avoided
                && r.carrier == carrier
                && &r.base_index == base_index
        })
        .ok_or_else(|| {
            RunError::RequirementNotMet(format!(
                "avoid {avoided} {carrier} \"{base_index}\" for the given name"
            ))
        })?;
    let stage = &run.stages()[record.stage];
    let witness =
        avoidance_witness(stage, avoided, carrier, base_index, &shifted).ok_or_else(|| {
            RunError::VerificationFailed("met avoidance requirement leaves no witness index".into())
        })?;

    // the checked depth must expose the recorded escape position
    let depth = run
        .schedule
        .truncation_depth
        .max(witness.forced_out.len());
    let v = run.u_tree(carrier, &witness.index)?;
    let v_pattern = v.pattern_to(depth)?;
    let w_pattern = run.u_tree(carrier, base_index)?.pattern_to(depth)?;
    if !v_pattern.is_subset(&w_pattern) {
        return Err(RunError::VerificationFailed(format!(
            "{v_pattern} is not below {w_pattern}"
        )));
    }
    let u_pattern = run
        .u_tree(avoided, &BitString::empty())?
        .pattern_to(depth)?
        .act(sigma);
    let forced_out = df_notin(&v_pattern, name, &u_pattern).ok_or_else(|| {
        RunError::VerificationFailed(format!(
            "{v_pattern} does not force the name out of {u_pattern}"
        ))
    })?;
    Ok(TheoremKOutcome {
        tree: v,
        witness_index: witness.index,
        stage: record.stage,
        forced_out,
        checked_depth: depth,
    })
}

/// A parsed requirement script: schedule and budget settings plus the
/// requirement list.
pub struct RunScript {
    pub schedule: Schedule,
    pub budget: usize,
    pub name_bound: usize,
    pub requirements: Vec<Requirement>,
}

/// Parses the line-based requirement script format. Settings lines (`depth`,
/// `budget`, `bound`, `extends-between`, `trailing`) may appear anywhere;
/// every other non-comment line is a requirement, kept in order.
pub fn parse_script(text: &str) -> Result<RunScript, RunError> {
    let mut schedule = Schedule::default();
    let mut budget = DEFAULT_STAGE_BUDGET;
    let mut name_bound = 8usize;
    let mut requirements = Vec::new();
    let parse_usize = |word: Option<&str>, what: &str| -> Result<usize, RunError> {
        word.and_then(|w| w.parse().ok())
            .ok_or_else(|| RunError::Script(format!("expected a number after {what}")))
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next().unwrap() {
            "depth" => schedule.truncation_depth = parse_usize(words.next(), "depth")?,
            "budget" => budget = parse_usize(words.next(), "budget")?,
            "bound" => name_bound = parse_usize(words.next(), "bound")?,
            "extends-between" => {
                schedule.extends_between = parse_usize(words.next(), "extends-between")?
            }
            "trailing" => schedule.trailing_extends = parse_usize(words.next(), "trailing")?,
            "height" => {
                requirements.push(Requirement::Height(parse_usize(words.next(), "height")?))
            }
            "root" => {
                let items = crate::systems::parse_quoted_list(line);
                if items.len() != 1 {
                    return Err(RunError::Script(format!("bad root line: {line}")));
                }
                let tree: SilverPattern = items[0]
                    .parse()
                    .map_err(|e| RunError::Script(format!("root pattern: {e}")))?;
                requirements.push(Requirement::Root(tree));
            }
            "cover" => {
                let items = crate::systems::parse_quoted_list(line);
                if items.is_empty() {
                    return Err(RunError::Script(format!("bad cover line: {line}")));
                }
                let mut trees = Vec::new();
                for item in items {
                    trees.push(
                        item.parse::<SilverPattern>()
                            .map_err(|e| RunError::Script(format!("cover pattern: {e}")))?,
                    );
                }
                requirements.push(Requirement::Cover(trees));
            }
            "avoid" => {
                let avoided = parse_usize(words.next(), "avoid")?;
                let carrier = parse_usize(words.next(), "avoid coordinate")?;
                let quoted = crate::systems::parse_quoted_list(line);
                if quoted.is_empty() {
                    return Err(RunError::Script(format!("bad avoid line: {line}")));
                }
                let base_index: BitString = quoted[0]
                    .parse()
                    .map_err(|e| RunError::Script(format!("avoid index: {e}")))?;
                let sigma: BitString = match quoted.get(1) {
                    Some(s) => s
                        .parse()
                        .map_err(|e| RunError::Script(format!("avoid sigma: {e}")))?,
                    None => BitString::empty(),
                };
                let name = RealName::canonical(name_bound).shift(&sigma);
                requirements.push(Requirement::AvoidName {
                    name,
                    avoided,
                    carrier,
                    base_index,
                });
            }
            other => return Err(RunError::Script(format!("unknown directive: {other}"))),
        }
    }
    Ok(RunScript {
        schedule,
        budget,
        name_bound,
        requirements,
    })
}
