//! Runnable verification suites for the structural lemmas.
//!
//! Each suite generates instances from a seeded deterministic stream, runs
//! the construction under test, and checks the claimed property — where the
//! property has an independent finite formulation, against the brute-force
//! node-set oracle in [`oracle`] rather than against the implementation
//! being tested. Reports are plain data so the command-line front end and
//! the test harness can share them.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use std::collections::BTreeSet;
use std::fmt;

use crate::generic::{
    check_density_u, check_finite_cover, flip_symmetry, generic_point, mod1_membership,
    run_generic, theorem_k_search, Fragment, GenericRun, Requirement, RunError, Schedule,
};
use crate::names::{
    avoidance_witness, df_notin, df_notin_all, df_prefix, eval_name, forced_prefix, k1_shrink,
    k2_avoid_self, ka_step, FilterChain, RealName,
};
use crate::points::LazyPoint;
use crate::strings::{xor_strings, BitString};
use crate::systems::{sys3_check, Ambient, Certificate, FusionChain, MultiSystem, SplitSystem};
use crate::trees::{validate_silver_truncated, SilverPattern, Slot};

/// Brute-force node-set computations, kept independent of the pattern
/// algebra they are used to check: membership is re-derived from raw slots
/// and every set is enumerated, never rewritten algebraically.
pub mod oracle {
    use super::*;

    /// Slot-by-slot membership, the oracle's own definition of the tree.
    pub fn matches(p: &SilverPattern, t: &BitString) -> bool {
        (0..t.len()).all(|k| match p.slot(k) {
            Slot::Fixed(d) => t.bit(k) == d,
            Slot::Free => true,
        })
    }

    /// Selection mask of a pattern over a shared string pool.
    pub fn mask(p: &SilverPattern, pool: &[BitString]) -> Vec<bool> {
        pool.iter().map(|t| matches(p, t)).collect()
    }

    /// Enumerated node set to the pool depth.
    pub fn node_set(p: &SilverPattern, pool: &[BitString]) -> BTreeSet<BitString> {
        pool.iter().filter(|t| matches(p, t)).cloned().collect()
    }

    /// Membership in a fusion limit, recomputed over every recorded stage
    /// and every realized layer.
    pub fn fusion_member(stages: &[MultiSystem], k: usize, s: &BitString, t: &BitString) -> bool {
        for stage in stages {
            let Some(sys) = stage.get(k) else { continue };
            for n in s.len()..sys.height() {
                let hit = BitString::all_of_length(n - s.len())
                    .iter()
                    .any(|ext| matches(sys.tree(&s.concat(ext)), t));
                if !hit {
                    return false;
                }
            }
        }
        true
    }
}

/// Deterministic instance generator.
pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn flip(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n.max(1))
    }

    pub fn bitstring(&mut self, max_len: usize) -> BitString {
        let len = self.below(max_len + 1);
        BitString::from_bits((0..len).map(|_| self.flip()).collect())
    }

    pub fn pattern(&mut self, max_len: usize) -> SilverPattern {
        let len = self.below(max_len + 1);
        let slots = (0..len)
            .map(|_| match self.below(3) {
                0 => Slot::Fixed(false),
                1 => Slot::Fixed(true),
                _ => Slot::Free,
            })
            .collect();
        SilverPattern::new(slots)
    }

    /// A proper-or-equal subtree: some free positions of `t` get fixed.
    pub fn subtree(&mut self, t: &SilverPattern, reach: usize) -> SilverPattern {
        let mut out = t.clone();
        let extent = t.len() + reach;
        for k in 0..extent {
            if out.slot(k) == Slot::Free && self.below(3) == 0 {
                let digit = self.flip();
                out = out
                    .intersect(&SilverPattern::fixing(k, digit))
                    .expect("fixing a free position never conflicts");
            }
        }
        out
    }

    /// A valid splitting system built by seeding and randomly interleaving
    /// extensions with top-layer reductions.
    pub fn valid_system(&mut self, max_height: usize) -> SplitSystem {
        let mut sys = SplitSystem::seed(self.pattern(2));
        let ops = self.below(2 * max_height.max(1)) + 1;
        for _ in 0..ops {
            if sys.height() < max_height && (sys.height() == 1 || self.flip()) {
                sys = sys.extend();
            } else {
                let layer = BitString::all_of_length(sys.height() - 1);
                let s0 = layer[self.below(layer.len())].clone();
                let smaller = self.subtree(sys.tree(&s0), 2);
                sys = sys.reduce_at(&s0, &smaller).expect("subtree stays below");
            }
        }
        sys
    }

    /// A real name whose digit classes are pre-dense by construction: each
    /// digit reads some tree position, possibly flipped, with one side of
    /// the split optionally refined into two members.
    pub fn real_name(&mut self, bound: usize) -> RealName {
        let classes = (0..bound)
            .map(|n| {
                let pivot = match self.below(3) {
                    0 => n,
                    _ => self.below(bound.max(1)),
                };
                let flip = self.below(4) == 0;
                let mut zero = vec![SilverPattern::fixing(pivot, flip)];
                let mut one = vec![SilverPattern::fixing(pivot, !flip)];
                if self.below(3) == 0 {
                    // refine one side on a second position; the union is kept
                    let q = pivot + 1 + self.below(2);
                    let side = self.flip();
                    let base = SilverPattern::fixing(pivot, flip != side);
                    let refined = vec![
                        base.intersect(&SilverPattern::fixing(q, false)).unwrap(),
                        base.intersect(&SilverPattern::fixing(q, true)).unwrap(),
                    ];
                    if side {
                        one = refined;
                    } else {
                        zero = refined;
                    }
                }
                [zero, one]
            })
            .collect();
        RealName::new(classes).expect("pivot classes are cross-incompatible")
    }

    /// A name that is canonical at every digit except one flipped digit, so
    /// forcing its prefix is guaranteed to diverge from the canonical name.
    pub fn divergent_name(&mut self, bound: usize) -> (RealName, usize) {
        let flipped_at = self.below(bound.max(1));
        let classes = (0..bound)
            .map(|n| {
                let flip = n == flipped_at;
                [
                    vec![SilverPattern::fixing(n, flip)],
                    vec![SilverPattern::fixing(n, !flip)],
                ]
            })
            .collect();
        (
            RealName::new(classes).expect("single-position classes are cross-incompatible"),
            flipped_at,
        )
    }
}

/// Parameters shared by the suites; each suite reads the fields it needs.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub seed: u64,
    pub cases: usize,
    pub depth: usize,
    pub budget: usize,
    /// Override for the cover sets of the finite-cover suite.
    pub cover: Option<Vec<SilverPattern>>,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 0x5117e2,
            cases: 100,
            depth: 4,
            budget: crate::generic::DEFAULT_STAGE_BUDGET,
            cover: None,
        }
    }
}

/// Outcome of one suite: total checks performed and the failures, each as a
/// one-line description.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(detail());
        }
    }

    fn fail(&mut self, detail: String) {
        self.checks += 1;
        self.failures.push(detail);
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pass() {
            write!(f, "suite {}: PASS ({} checks)", self.name, self.checks)
        } else {
            writeln!(
                f,
                "suite {}: FAIL ({} of {} checks failed)",
                self.name,
                self.failures.len(),
                self.checks
            )?;
            for failure in self.failures.iter().take(5) {
                writeln!(f, "  {failure}")?;
            }
            write!(f, "")
        }
    }
}

/// Tree-algebra oracle equivalence: membership, restriction, action,
/// intersection and union-coverage agree with enumerated node sets.
pub fn tree_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("tree");
    let mut gen = Gen::new(params.seed);
    let depth = params.depth.max(2);
    let pool = BitString::all_up_to(depth);
    for case in 0..params.cases {
        let t = gen.pattern(depth);
        let s = gen.pattern(depth);
        let word = gen.bitstring(depth);

        // membership against raw slot matching
        let probe = gen.bitstring(depth);
        report.check(t.contains(&probe) == oracle::matches(&t, &probe), || {
            format!("case {case}: membership of {probe} in {t} disagrees")
        });

        // restriction: comparable nodes only
        if t.contains(&word) {
            let restricted = t.restrict(&word).expect("contained node");
            let expect: Vec<bool> = pool
                .iter()
                .map(|n| oracle::matches(&t, n) && n.comparable(&word))
                .collect();
            report.check(oracle::mask(&restricted, &pool) == expect, || {
                format!("case {case}: restriction of {t} at {word} disagrees")
            });
        } else {
            report.check(t.restrict(&word).is_err(), || {
                format!("case {case}: restriction accepted the foreign node {word}")
            });
        }

        // action: the node set maps through the xor digitwise
        let sigma = gen.bitstring(depth);
        let acted = t.act(&sigma);
        let mapped: BTreeSet<BitString> = oracle::node_set(&t, &pool)
            .iter()
            .map(|n| xor_strings(&sigma, n))
            .collect();
        report.check(oracle::node_set(&acted, &pool) == mapped, || {
            format!("case {case}: action of {sigma} on {t} disagrees")
        });

        // intersection: set intersection, or a dead end when incompatible
        let meet_depth = t.len().max(s.len());
        match t.intersect(&s) {
            Some(meet) => {
                let expect: Vec<bool> = pool
                    .iter()
                    .map(|n| oracle::matches(&t, n) && oracle::matches(&s, n))
                    .collect();
                report.check(oracle::mask(&meet, &pool) == expect, || {
                    format!("case {case}: intersection {t} with {s} disagrees")
                });
            }
            None => {
                let survivors = BitString::all_of_length(meet_depth)
                    .iter()
                    .filter(|n| oracle::matches(&t, n) && oracle::matches(&s, n))
                    .count();
                report.check(survivors == 0, || {
                    format!("case {case}: {t} and {s} reported incompatible but share branches")
                });
            }
        }

        // union coverage, cross-checked two levels beyond the decisive depth
        let parts: Vec<SilverPattern> = (0..=gen.below(3)).map(|_| gen.pattern(depth)).collect();
        let decisive = parts
            .iter()
            .map(SilverPattern::len)
            .chain(std::iter::once(t.len()))
            .max()
            .unwrap()
            + 2;
        let brute = t
            .nodes_at(decisive)
            .iter()
            .all(|n| parts.iter().any(|p| oracle::matches(p, n)));
        report.check(t.subset_of_union(&parts) == brute, || {
            format!("case {case}: union coverage of {t} disagrees with depth-{decisive} oracle")
        });
    }
    report
}

/// Extension calculus: generated systems validate, extensions and reductions
/// preserve every clause, and the reduction-of-extension triple property
/// holds.
pub fn lsys_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("lsys");
    let mut gen = Gen::new(params.seed);
    let ambient = Ambient::All;
    for case in 0..params.cases {
        let phi = gen.valid_system(4);
        report.check(phi.validate(&ambient).all_hold(), || {
            format!("case {case}: generated system fails validation")
        });

        let psi = phi.extend();
        report.check(psi.validate(&ambient).all_hold(), || {
            format!("case {case}: extension fails validation")
        });
        report.check(psi.properly_extends(&phi), || {
            format!("case {case}: extension is not a proper extension")
        });

        let layer = BitString::all_of_length(psi.height() - 1);
        let s0 = layer[gen.below(layer.len())].clone();
        let smaller = gen.subtree(psi.tree(&s0), 2);
        let psi2 = psi.reduce_at(&s0, &smaller).expect("subtree stays below");
        report.check(psi2.validate(&ambient).all_hold(), || {
            format!("case {case}: reduction fails validation")
        });
        report.check(psi2.reduces(&psi), || {
            format!("case {case}: reduce_at output does not reduce its input")
        });
        report.check(
            sys3_check(&phi, &psi, &psi2) && psi2.properly_extends(&phi),
            || format!("case {case}: reduction of a proper extension is not one"),
        );

        // reduction is monotone: two nested reductions collapse into one
        let tighter = gen.subtree(&smaller, 1);
        let twice = psi2.reduce_at(&s0, &tighter).expect("still below");
        let once = psi.reduce_at(&s0, &tighter).expect("still below");
        report.check(twice == once, || {
            format!("case {case}: nested reductions disagree with the direct one")
        });

        // validity is equivariant under the action
        let sigma = gen.bitstring(3);
        report.check(phi.act(&sigma).validate(&ambient).all_hold(), || {
            format!("case {case}: acted system fails validation")
        });
    }
    report
}

/// Fusion of mixed chains: truncations are stage-stable, windows validate,
/// and membership matches the stage-by-stage brute force exactly.
pub fn issil_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("issil");
    let mut gen = Gen::new(params.seed);
    let chains = params.cases.clamp(4, 64);
    for case in 0..chains {
        let mut chain = FusionChain::new(MultiSystem::empty());
        chain.step_seed(0, gen.pattern(1)).expect("fresh seed");
        let mut extends = 1usize;
        for _ in 0..7 {
            let sys_height = chain.last().height_at(0);
            if extends < 4 && (sys_height < 2 || gen.flip()) {
                chain.step_extend(0).expect("extension stage");
                extends += 1;
            } else {
                let layer = BitString::all_of_length(sys_height - 1);
                let s0 = layer[gen.below(layer.len())].clone();
                let smaller = gen.subtree(chain.last().get(0).unwrap().tree(&s0), 1);
                chain.step_reduce(0, &s0, &smaller).expect("reduction stage");
            }
        }
        let top = chain.last().get(0).unwrap().top_stem_len();

        let window = chain
            .fusion_truncate(0, &BitString::empty(), top)
            .expect("stable to the top stem depth");
        report.check(validate_silver_truncated(&window), || {
            format!("case {case}: fusion window is not a Silver truncation")
        });

        for t in BitString::all_up_to(top) {
            let answer = chain
                .fusion_member(0, &BitString::empty(), &t)
                .expect("coordinate present");
            let brute = oracle::fusion_member(chain.stages(), 0, &BitString::empty(), &t);
            report.check(answer.member == brute, || {
                format!("case {case}: membership of {t} disagrees with the stage brute force")
            });
            report.check(answer.certificate == Certificate::Stable, || {
                format!("case {case}: membership of {t} is not stage-stable")
            });
        }

        // the limit below a deeper index, against the same brute force
        let sys = chain.last().get(0).unwrap();
        if sys.height() > 1 {
            for t in BitString::all_up_to(top) {
                let s = BitString::from_bits(vec![false]);
                let answer = chain.fusion_member(0, &s, &t).expect("coordinate present");
                let brute = oracle::fusion_member(chain.stages(), 0, &s, &t);
                report.check(answer.member == brute, || {
                    format!("case {case}: indexed membership of {t} disagrees")
                });
            }
        }
    }
    report
}

fn uu_roots() -> Vec<SilverPattern> {
    ["0", "11", "0*1", "10"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn uu_covers() -> Vec<Vec<SilverPattern>> {
    vec![
        vec!["0".parse().unwrap(), "1".parse().unwrap()],
        vec![
            "00".parse().unwrap(),
            "01".parse().unwrap(),
            "1".parse().unwrap(),
        ],
        vec![
            "0".parse().unwrap(),
            "10".parse().unwrap(),
            "11".parse().unwrap(),
        ],
    ]
}

/// The shared run of the density/cover suites: heights through coordinate 2,
/// a root requirement per sample tree, and every cover set.
pub fn uu_run(params: &SuiteParams) -> Result<GenericRun, RunError> {
    let mut requirements = vec![
        Requirement::Height(0),
        Requirement::Height(1),
        Requirement::Height(2),
    ];
    for t in uu_roots() {
        requirements.push(Requirement::Root(t));
    }
    let covers = match &params.cover {
        Some(d) => vec![d.clone()],
        None => uu_covers(),
    };
    for d in covers {
        requirements.push(Requirement::Cover(d));
    }
    run_generic(
        Fragment::unrestricted(),
        requirements,
        Schedule {
            extends_between: 0,
            trailing_extends: params.depth + 2,
            truncation_depth: params.depth,
        },
        params.budget,
    )
}

/// Closure of the derived family at truncation depth: the full tree is
/// available, and the family is closed under the action and restriction.
pub fn uu1_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("uu1");
    let depth = params.depth.clamp(2, 3);
    let run = match run_generic(
        Fragment::unrestricted(),
        vec![Requirement::Height(1)],
        Schedule {
            extends_between: 0,
            trailing_extends: depth + 2,
            truncation_depth: depth,
        },
        params.budget,
    ) {
        Ok(run) => run,
        Err(e) => {
            report.fail(format!("run failed: {e}"));
            return report;
        }
    };
    report.check(run.fragment().contains(&SilverPattern::full()), || {
        "fragment lost the full tree".to_string()
    });
    let family = match run.family_patterns(depth) {
        Ok(f) => f,
        Err(e) => {
            report.fail(format!("family extraction failed: {e}"));
            return report;
        }
    };
    for k in run.final_stage().support() {
        let base = run.u_tree(k, &BitString::empty()).expect("supported");
        for sigma in BitString::all_up_to(depth) {
            let acted = base.acted(&sigma).pattern_to(depth).expect("stable");
            report.check(family.contains(&acted), || {
                format!("acted member {acted} escapes the family")
            });
        }
        let base_pattern = base.pattern_to(depth).expect("stable");
        for u in BitString::all_up_to(2) {
            if !base_pattern.contains(&u) {
                continue;
            }
            let restricted = base
                .restricted(&u)
                .expect("member node")
                .pattern_to(depth)
                .expect("stable");
            let matched = family
                .iter()
                .any(|f| f.truncate(depth) == restricted.truncate(depth));
            report.check(matched, || {
                format!("restriction at {u} escapes the family at depth {depth}")
            });
        }
    }
    report
}

/// Density of the derived family: every rooted sample tree has a family
/// member below it.
pub fn uu2_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("uu2");
    let run = match uu_run(params) {
        Ok(run) => run,
        Err(e) => {
            report.fail(format!("run failed: {e}"));
            return report;
        }
    };
    for t in uu_roots() {
        match check_density_u(&run, &t) {
            Ok(hit) => report.check(hit, || format!("no family member below {t}")),
            Err(e) => report.fail(format!("density check below {t} failed: {e}")),
        }
    }
    // negative control: an unrooted tree may honestly lack a member below it
    let control: SilverPattern = "111".parse().unwrap();
    match check_density_u(&run, &control) {
        Ok(_) => report.check(true, String::new),
        Err(e) => report.fail(format!("control density check failed: {e}")),
    }
    report
}

/// Finite covers: every family member is covered by a finite subfamily of
/// each pre-dense cover set, which stays pre-dense alongside the family.
pub fn uu3_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("uu3");
    let run = match uu_run(params) {
        Ok(run) => run,
        Err(e) => {
            report.fail(format!("run failed: {e}"));
            return report;
        }
    };
    let covers = match &params.cover {
        Some(d) => vec![d.clone()],
        None => uu_covers(),
    };
    for (i, d) in covers.iter().enumerate() {
        match check_finite_cover(&run, d) {
            Ok(cover) => {
                for entry in &cover.entries {
                    report.check(entry.witness.is_some(), || {
                        format!("family member {} escapes cover set {i}", entry.member)
                    });
                    if let Some(w) = &entry.witness {
                        report.check(!w.is_empty() && w.len() <= d.len(), || {
                            format!("degenerate witness for {}", entry.member)
                        });
                    }
                }
                report.check(cover.predense_in_extended, || {
                    format!("cover set {i} loses pre-density alongside the family")
                });
            }
            Err(e) => report.fail(format!("cover check {i} failed: {e}")),
        }
    }
    // a sparse set must be rejected, not silently accepted
    let sparse = vec!["0".parse().unwrap()];
    report.check(
        matches!(check_finite_cover(&run, &sparse), Err(RunError::NotPredense)),
        || "sparse cover set was not rejected".to_string(),
    );
    report
}

/// The finite-avoidance shrink: postconditions re-verified by the forcing
/// predicates, plus the evaluation soundness cross-check along descending
/// chains.
pub fn k1_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("k1");
    let mut gen = Gen::new(params.seed);
    for case in 0..params.cases {
        let bound = 6 + gen.below(3);
        let name = gen.real_name(bound);
        let tree = gen.pattern(3);
        let parts: Vec<SilverPattern> = (0..=gen.below(3)).map(|_| gen.pattern(3)).collect();
        let out = match k1_shrink(&parts, &tree, &name, &[]) {
            Ok(out) => out,
            Err(e) => {
                report.fail(format!("case {case}: shrink failed: {e}"));
                continue;
            }
        };
        report.check(out.tree.is_subset(&tree), || {
            format!("case {case}: forcing tree escaped its bound")
        });
        for (j, (small, big)) in out.shrunk.iter().zip(&parts).enumerate() {
            report.check(small.is_subset(big), || {
                format!("case {case}: shrunken part {j} escaped")
            });
        }
        report.check(df_prefix(&out.tree, &name, &out.forced), || {
            format!("case {case}: forced string is not directly forced")
        });
        report.check(df_notin_all(&out.tree, &name, &out.shrunk).is_some(), || {
            format!("case {case}: union avoidance postcondition fails")
        });

        // soundness: a chain from the forcing tree through every digit class
        // evaluates the name consistently with the forced prefix
        let mut chain = FilterChain::from_entries(vec![out.tree.clone()]).expect("single entry");
        match chain.descend_through(&name) {
            Ok(()) => {
                let value = eval_name(&chain, &name);
                report.check(out.forced.is_prefix_of(&value), || {
                    format!(
                        "case {case}: evaluation {value} contradicts the forced prefix {}",
                        out.forced
                    )
                });
            }
            Err(e) => report.fail(format!("case {case}: descent failed: {e}")),
        }
    }
    report
}

/// Self-avoidance: constructed instances satisfy the divergence
/// precondition, and the output directly forces the name out of its own
/// translate; evaluation soundness is cross-checked as well.
pub fn k2_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("k2");
    let mut gen = Gen::new(params.seed);
    for case in 0..params.cases {
        let bound = 5 + gen.below(3);
        let (name, flipped_at) = gen.divergent_name(bound);
        // an acting string with a 1 at the flipped digit would cancel the
        // divergence and make the precondition unsatisfiable
        let mut sigma_bits: Vec<bool> = gen.bitstring(3).bits().to_vec();
        if flipped_at < sigma_bits.len() {
            sigma_bits[flipped_at] = false;
        }
        let sigma = BitString::from_bits(sigma_bits);
        let start = gen.pattern(2);
        // descend until the shifted name's forced prefix diverges from the
        // canonical one
        let shifted = name.shift(&sigma);
        let acted_start = start.act(&sigma);
        let (acted_tree, _) =
            match crate::names::force_long_prefix(&acted_start, &shifted, flipped_at + 1, &[]) {
                Ok(out) => out,
                Err(e) => {
                    report.fail(format!("case {case}: preparation failed: {e}"));
                    continue;
                }
            };
        let tree = acted_tree.act(&sigma);
        let out = match k2_avoid_self(&tree, &name, &sigma, &[]) {
            Ok(out) => out,
            Err(e) => {
                report.fail(format!("case {case}: avoidance failed: {e}"));
                continue;
            }
        };
        report.check(out.is_subset(&tree), || {
            format!("case {case}: output escaped its bound")
        });
        let witness = df_notin(&out, &name, &out.act(&sigma));
        report.check(witness.is_some(), || {
            format!("case {case}: self-avoidance postcondition fails")
        });

        let mut chain = FilterChain::from_entries(vec![out.clone()]).expect("single entry");
        match chain.descend_through(&name) {
            Ok(()) => {
                let value = eval_name(&chain, &name);
                let forced = forced_prefix(&out, &name);
                report.check(forced.is_prefix_of(&value), || {
                    format!("case {case}: evaluation contradicts the forced prefix")
                });
            }
            Err(e) => report.fail(format!("case {case}: descent failed: {e}")),
        }
    }
    report
}

/// The avoidance step on multisystems, both coordinate shapes: the output
/// extends its input, stays valid, and carries the avoidance witness.
pub fn ka_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("ka");
    let mut gen = Gen::new(params.seed);
    let ambient = Ambient::All;
    let cases = params.cases.clamp(4, 64);
    for case in 0..cases {
        // distinct coordinates with a canonical name
        let base = MultiSystem::empty()
            .with_coord(0, gen.valid_system(2))
            .with_coord(1, gen.valid_system(2));
        let bound = 10 + gen.below(4);
        let canonical = RealName::canonical(bound);
        match ka_step(&base, 0, 1, &BitString::empty(), &canonical, &[]) {
            Ok(out) => {
                report.check(out.extends(&base), || {
                    format!("case {case}: distinct-coordinate step does not extend")
                });
                for k in out.support() {
                    report.check(out.get(k).unwrap().validate(&ambient).all_hold(), || {
                        format!("case {case}: coordinate {k} invalid after the step")
                    });
                }
                report.check(
                    avoidance_witness(&out, 0, 1, &BitString::empty(), &canonical).is_some(),
                    || format!("case {case}: no avoidance witness on the output"),
                );
            }
            Err(e) => report.fail(format!("case {case}: distinct-coordinate step failed: {e}")),
        }

        // equal coordinates with a name that diverges at a pinned digit
        let pinned_root = SilverPattern::fixing(0, gen.flip());
        let seed_tree = gen.subtree(&pinned_root, 1);
        let base = MultiSystem::empty().with_coord(0, SplitSystem::seed(seed_tree).extend());
        let name = RealName::canonical(bound).shift(&BitString::from_bits(vec![true]));
        let t0 = BitString::from_bits(vec![false]);
        match ka_step(&base, 0, 0, &t0, &name, &[]) {
            Ok(out) => {
                report.check(out.extends(&base), || {
                    format!("case {case}: equal-coordinate step does not extend")
                });
                report.check(out.get(0).unwrap().validate(&ambient).all_hold(), || {
                    format!("case {case}: coordinate invalid after the equal step")
                });
                report.check(avoidance_witness(&out, 0, 0, &t0, &name).is_some(), || {
                    format!("case {case}: no avoidance witness on the equal step")
                });
            }
            Err(e) => report.fail(format!("case {case}: equal-coordinate step failed: {e}")),
        }
    }
    report
}

/// The end-to-end avoidance scenario on a two-coordinate run, covering both
/// coordinate shapes, verified at depth at least 4.
pub fn theorem_k_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("k");
    let depth = params.depth.max(4);
    let bound = depth * 3 + 4;
    let canonical = RealName::canonical(bound);
    let one = BitString::from_bits(vec![true]);
    let flipped = canonical.shift(&one);
    let zero_index = BitString::from_bits(vec![false]);
    let requirements = vec![
        Requirement::Root("0".parse().unwrap()),
        Requirement::Height(2),
        Requirement::AvoidName {
            name: canonical.clone(),
            avoided: 0,
            carrier: 1,
            base_index: BitString::empty(),
        },
        Requirement::AvoidName {
            name: flipped,
            avoided: 0,
            carrier: 0,
            base_index: zero_index.clone(),
        },
    ];
    let run = match run_generic(
        Fragment::unrestricted(),
        requirements,
        Schedule {
            extends_between: 1,
            trailing_extends: depth + 2,
            truncation_depth: depth,
        },
        params.budget.max(24),
    ) {
        Ok(run) => run,
        Err(e) => {
            report.fail(format!("run failed: {e}"));
            return report;
        }
    };

    match theorem_k_search(&run, &canonical, 0, 1, &BitString::empty(), &BitString::empty()) {
        Ok(out) => {
            report.check(out.checked_depth >= 4, || {
                format!(
                    "distinct-coordinate check depth {} below 4",
                    out.checked_depth
                )
            });
            report.check(
                BitString::empty().is_proper_prefix_of(&out.witness_index),
                || "distinct-coordinate witness index does not extend the base".to_string(),
            );
        }
        Err(e) => report.fail(format!("distinct-coordinate search failed: {e}")),
    }
    match theorem_k_search(&run, &canonical, 0, 0, &zero_index, &one) {
        Ok(out) => {
            report.check(out.checked_depth >= 4, || {
                format!("equal-coordinate check depth {} below 4", out.checked_depth)
            });
            report.check(zero_index.is_proper_prefix_of(&out.witness_index), || {
                "equal-coordinate witness index does not extend the base".to_string()
            });
        }
        Err(e) => report.fail(format!("equal-coordinate search failed: {e}")),
    }
    report.check(
        matches!(
            theorem_k_search(
                &run,
                &canonical,
                1,
                0,
                &BitString::empty(),
                &BitString::empty()
            ),
            Err(RunError::RequirementNotMet(_))
        ),
        || "search without a matching requirement was not rejected".to_string(),
    );
    report
}

/// The stem flip: it fixes every sampled tree setwise and moves every branch
/// at stem depth plus three.
pub fn sym_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("sym");
    let mut gen = Gen::new(params.seed);
    for case in 0..params.cases {
        let tree = gen.pattern(5);
        let sigma = flip_symmetry(&tree);
        report.check(tree.act(&sigma) == tree, || {
            format!("case {case}: flip does not fix {tree}")
        });
        let depth = tree.stem().len() + 3;
        let moved = tree
            .nodes_at(depth)
            .iter()
            .all(|b| &xor_strings(&sigma, b) != b);
        report.check(moved, || {
            format!("case {case}: some depth-{depth} branch of {tree} is unmoved")
        });
    }
    report
}

/// Membership in the staged family intersection is an orbit property at the
/// checked depth, and the point extracted from a descending chain lands
/// inside.
pub fn mod1_suite(params: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new("mod1");
    let depth = params.depth.clamp(2, 4);
    let run = match run_generic(
        Fragment::unrestricted(),
        vec![
            Requirement::Height(0),
            Requirement::Root("0".parse().unwrap()),
        ],
        Schedule {
            extends_between: 0,
            trailing_extends: depth + 2,
            truncation_depth: depth,
        },
        params.budget,
    ) {
        Ok(run) => run,
        Err(e) => {
            report.fail(format!("run failed: {e}"));
            return report;
        }
    };
    let family = match run.family_patterns(depth) {
        Ok(f) => f,
        Err(e) => {
            report.fail(format!("family extraction failed: {e}"));
            return report;
        }
    };
    let families = vec![family];

    // a point pinned down by a chain through a rooted family member is inside
    let zero: SilverPattern = "0".parse().unwrap();
    let member = families[0]
        .iter()
        .find(|u| u.is_subset(&zero))
        .cloned()
        .expect("some family member sits below the root");
    let mut entries = vec![member.clone()];
    let mut current = member;
    while current.stem().len() < depth {
        let next = current
            .restrict(&current.stem().child(false))
            .expect("stem child");
        entries.push(next.clone());
        current = next;
    }
    let chain = FilterChain::from_entries(entries).expect("descending");
    let x = match generic_point(&chain) {
        Ok(prefix) => LazyPoint::new(prefix, crate::points::TailRule::AllZero),
        Err(e) => {
            report.fail(format!("point extraction failed: {e}"));
            return report;
        }
    };
    report.check(mod1_membership(&x, &families, depth), || {
        "chain-extracted point escapes the family intersection".to_string()
    });

    // against the untranslated members below the root, a point on the other
    // side of the first digit is honestly outside
    let rooted: Vec<SilverPattern> = families[0]
        .iter()
        .filter(|u| u.is_subset(&"0".parse().unwrap()))
        .cloned()
        .collect();
    report.check(!rooted.is_empty(), || "no members below the root".to_string());
    let restricted = vec![rooted];
    report.check(
        !mod1_membership(&LazyPoint::all_one(), &restricted, depth),
        || "a point off the root slipped into the rooted members".to_string(),
    );
    report.check(mod1_membership(&x, &restricted, depth), || {
        "the chain-extracted point escapes the rooted members".to_string()
    });

    // orbit invariance at the checked depth, over the action-closed family
    for probe in [x.clone(), LazyPoint::all_one(), LazyPoint::all_zero()] {
        let value = mod1_membership(&probe, &families, depth);
        for sigma in BitString::all_up_to(depth) {
            let moved = crate::points::xor_point(&sigma, &probe);
            report.check(mod1_membership(&moved, &families, depth) == value, || {
                format!("membership of {probe} not invariant under {sigma}")
            });
        }
    }
    report
}

/// Names of all suites, in the order the aggregate run uses.
pub fn suite_names() -> &'static [&'static str] {
    &[
        "tree", "lsys", "issil", "uu1", "uu2", "uu3", "k1", "k2", "ka", "k", "sym", "mod1",
    ]
}

/// Runs one suite by name.
pub fn run_suite(name: &str, params: &SuiteParams) -> Option<SuiteReport> {
    match name {
        "tree" => Some(tree_suite(params)),
        "lsys" => Some(lsys_suite(params)),
        "issil" => Some(issil_suite(params)),
        "uu1" => Some(uu1_suite(params)),
        "uu2" => Some(uu2_suite(params)),
        "uu3" => Some(uu3_suite(params)),
        "k1" => Some(k1_suite(params)),
        "k2" => Some(k2_suite(params)),
        "ka" => Some(ka_suite(params)),
        "k" => Some(theorem_k_suite(params)),
        "sym" => Some(sym_suite(params)),
        "mod1" => Some(mod1_suite(params)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_params(cases: usize) -> SuiteParams {
        SuiteParams {
            cases,
            ..SuiteParams::default()
        }
    }

    #[test]
    fn all_suites_pass_smoke() {
        for name in suite_names() {
            let report = run_suite(name, &quick_params(12)).unwrap();
            assert!(report.pass(), "suite {name} failed:\n{report}");
        }
    }

    #[test]
    fn unknown_suite_is_none() {
        assert!(run_suite("frobnicate", &quick_params(1)).is_none());
    }

    #[test]
    fn reports_are_deterministic() {
        let a = format!("{}", lsys_suite(&quick_params(20)));
        let b = format!("{}", lsys_suite(&quick_params(20)));
        assert_eq!(a, b);
    }

    #[test]
    fn generated_names_are_predense_over_everything() {
        let mut gen = Gen::new(7);
        for _ in 0..40 {
            let name = gen.real_name(5);
            for n in 0..name.bound() {
                let both: Vec<SilverPattern> = name.digit_classes(n).cloned().collect();
                assert!(SilverPattern::full().subset_of_union(&both));
            }
        }
    }

    #[test]
    fn generated_systems_have_bounded_height() {
        let mut gen = Gen::new(11);
        for _ in 0..30 {
            let sys = gen.valid_system(4);
            assert!(sys.height() >= 1 && sys.height() <= 4);
            assert!(sys.validate(&Ambient::All).all_hold());
        }
    }
}
