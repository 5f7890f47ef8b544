//! Ground-truth instrumentation: the potential function, bad-vote
//! accounting, collision counts and the per-iteration checks built on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weights `1 < C2 < C3 < C4 < C5 < C6` of the potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialConstants {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl Default for PotentialConstants {
    fn default() -> Self {
        Self {
            c2: 2.0,
            c3: 64.0,
            c4: 512.0,
            c5: 4096.0,
            c6: 32768.0,
        }
    }
}

impl PotentialConstants {
    pub fn new(c2: f64, c3: f64, c4: f64, c5: f64, c6: f64) -> Result<Self> {
        if !(1.0 < c2 && c2 < c3 && c3 < c4 && c4 < c5 && c5 < c6) {
            return Err(Error::InvalidParameter(
                "potential constants must satisfy 1 < C2 < C3 < C4 < C5 < C6".into(),
            ));
        }
        Ok(Self { c2, c3, c4, c5, c6 })
    }

    /// Largest decrease one iteration can cause, from the per-phase worst
    /// cases: `l⁻` grows by at most 2, `k` and `E` of each party by at most
    /// one, each party records at most one bad and one uncounted vote (each
    /// adding 1 to both counters, so `BVC_AB` grows by at most 8), a
    /// computation reset can switch branches only at `k ≤ 1`, and a
    /// transition phase loses at most `0.5·C4 + C3 + 1`.
    pub fn drop_bound(&self) -> f64 {
        2.0 * self.c3 + 4.0 * self.c2 + 1.8 * self.c4 + 2.0 * self.c5 + 16.0 * self.c6 + 0.5 * self.c4 + self.c3 + 1.0
    }
}

/// Both parties' analysis-relevant state at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PotentialInputs {
    pub l_plus: u64,
    pub l_minus: u64,
    pub k: [u64; 2],
    pub e: [u64; 2],
    pub bvc: [u64; 2],
}

impl PotentialInputs {
    /// `l⁺ = ⌊lcp / r⌋`, `l⁻ = (|T_A| + |T_B|)/r − 2l⁺`, rounded down.
    pub fn blocks(lcp: usize, len_a: usize, len_b: usize, r: usize) -> (u64, u64) {
        let l_plus = (lcp / r) as u64;
        let l_minus = ((len_a + len_b) / r) as u64 - 2 * l_plus;
        (l_plus, l_minus)
    }
}

/// The two-branch potential.
pub fn potential(s: &PotentialInputs, c: &PotentialConstants) -> f64 {
    let k_ab = (s.k[0] + s.k[1]) as f64;
    let e_ab = (s.e[0] + s.e[1]) as f64;
    let bvc_ab = (s.bvc[0] + s.bvc[1]) as f64;
    let base = s.l_plus as f64 - c.c3 * s.l_minus as f64;
    if s.k[0] == s.k[1] {
        base + c.c2 * k_ab - c.c5 * e_ab - 2.0 * c.c6 * bvc_ab
    } else {
        base - 0.9 * c.c4 * k_ab + c.c4 * e_ab - c.c6 * bvc_ab
    }
}

/// The single-counter potential `l⁺ − l⁻` of the large-alphabet scheme.
pub fn simple_potential(l_plus: u64, l_minus: u64) -> f64 {
    l_plus as f64 - l_minus as f64
}

/// Which vote one party cast in an iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Vote {
    None,
    V1,
    V2,
}

/// One party's voting step next to the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VoteRecord {
    pub vote: Vote,
    /// Whether both parties truly held equal `k`.
    pub k_equal: bool,
    /// `T[1, MP1]` truly equals one of the other party's meeting-point prefixes.
    pub mp1_matches: bool,
    /// Same for `T[1, MP2]`.
    pub mp2_matches: bool,
}

/// Bad or uncounted votes in one party's voting step.
pub fn classify_bvc(v: &VoteRecord) -> u64 {
    let bad = match v.vote {
        Vote::V1 => !v.mp1_matches,
        Vote::V2 => !v.mp2_matches,
        Vote::None => false,
    };
    let uncounted = v.k_equal
        && ((v.mp1_matches && v.vote != Vote::V1) || (!v.mp1_matches && v.mp2_matches && v.vote != Vote::V2));
    u64::from(bad) + u64::from(uncounted)
}

/// Per-iteration record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iter: u64,
    pub l_plus: u64,
    pub l_minus: u64,
    pub k_a: u64,
    pub k_b: u64,
    pub e_a: u64,
    pub e_b: u64,
    pub bvc: u64,
    /// Bad or uncounted votes of this iteration, before any status reset.
    pub bvc_added: u64,
    pub phi: f64,
    pub had_error: bool,
    pub had_collision: bool,
    /// Collisions where the first-layer hashes already agreed.
    pub h1_collisions: u64,
    /// Collisions introduced by the second layer.
    pub h2_collisions: u64,
    /// `l⁻ > 0` or `k_AB > 0` when the iteration began.
    pub dangerous: bool,
    pub corruptions: u64,
    pub computed: [bool; 2],
    pub len_a: usize,
    pub len_b: usize,
    /// Status resets in the transition phase.
    pub resets: [bool; 2],
}

pub const ITERATION_HEADER: &str = "iter,l_plus,l_minus,kA,kB,EA,EB,bvc,phi,err,coll";

impl IterationTrace {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.iter,
            self.l_plus,
            self.l_minus,
            self.k_a,
            self.k_b,
            self.e_a,
            self.e_b,
            self.bvc,
            self.phi,
            u8::from(self.had_error),
            u8::from(self.had_collision)
        )
    }
}

pub fn write_iterations<W: Write>(mut out: W, traces: &[IterationTrace]) -> Result<()> {
    writeln!(out, "{ITERATION_HEADER}")?;
    for t in traces {
        writeln!(out, "{}", t.csv_row())?;
    }
    Ok(())
}

/// Collision totals of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CollisionCounts {
    pub h1: u64,
    pub h2: u64,
    /// Iterations with at least one collision.
    pub iterations: u64,
    /// Iterations that began dangerous.
    pub dangerous_iters: u64,
    /// Collision iterations that did not begin dangerous.
    pub outside_dangerous: u64,
}

pub fn count_collisions(traces: &[IterationTrace]) -> CollisionCounts {
    let mut c = CollisionCounts::default();
    for t in traces {
        c.h1 += t.h1_collisions;
        c.h2 += t.h2_collisions;
        c.iterations += u64::from(t.had_collision);
        c.dangerous_iters += u64::from(t.dangerous);
        c.outside_dangerous += u64::from(t.had_collision && !t.dangerous);
    }
    c
}

/// Potential-lemma checks over one logged run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    /// Clean iterations whose potential rose by less than one.
    pub clean_violations: Vec<u64>,
    /// Largest single-iteration decrease.
    pub max_drop: f64,
    pub drop_bound: f64,
    pub final_phi: f64,
    pub final_bound: f64,
    /// Iterations where `2E ≥ k` survived the transition phase.
    pub reset_violations: Vec<u64>,
}

impl LemmaReport {
    /// Number of individual lemma violations.
    pub fn violations(&self) -> usize {
        self.clean_violations.len()
            + self.reset_violations.len()
            + usize::from(self.max_drop > self.drop_bound)
            + usize::from(self.final_phi > self.final_bound)
    }

    pub fn ok(&self) -> bool {
        self.clean_violations.is_empty()
            && self.max_drop <= self.drop_bound
            && self.final_phi <= self.final_bound
            && self.reset_violations.is_empty()
    }
}

/// Checks the per-iteration potential lemmas. `phi0` is the potential
/// before the first iteration; `r_total` and `n_eps = nε` size the final
/// bound `R + 20·C2·nε`.
pub fn check_lemmas(traces: &[IterationTrace], phi0: f64, c: &PotentialConstants, r_total: u64, n_eps: f64, drop_bound: f64) -> LemmaReport {
    let mut rep = LemmaReport {
        drop_bound,
        final_bound: r_total as f64 + 20.0 * c.c2 * n_eps,
        final_phi: traces.last().map_or(phi0, |t| t.phi),
        ..LemmaReport::default()
    };
    let mut prev = phi0;
    for t in traces {
        let delta = t.phi - prev;
        if !t.had_error && !t.had_collision && delta < 1.0 {
            rep.clean_violations.push(t.iter);
        }
        rep.max_drop = rep.max_drop.max(-delta);
        let ok_status = |k: u64, e: u64| (k == 0 && e == 0) || 2 * e < k;
        if !ok_status(t.k_a, t.e_a) || !ok_status(t.k_b, t.e_b) {
            rep.reset_violations.push(t.iter);
        }
        prev = t.phi;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_state_has_zero_potential() {
        assert_eq!(potential(&PotentialInputs::default(), &PotentialConstants::default()), 0.0);
    }

    #[test]
    fn single_term_cases() {
        let c = PotentialConstants::default();
        let s = PotentialInputs {
            l_plus: 5,
            ..Default::default()
        };
        assert_eq!(potential(&s, &c), 5.0);
        let s = PotentialInputs {
            k: [1, 0],
            ..Default::default()
        };
        assert!((potential(&s, &c) + 460.8).abs() < 1e-9);
    }

    #[test]
    fn constants_must_increase() {
        assert!(PotentialConstants::new(2.0, 64.0, 512.0, 4096.0, 32768.0).is_ok());
        assert!(PotentialConstants::new(2.0, 1.0, 512.0, 4096.0, 32768.0).is_err());
    }

    #[test]
    fn block_counts() {
        assert_eq!(PotentialInputs::blocks(35, 40, 50, 10), (3, 3));
        assert_eq!(PotentialInputs::blocks(0, 0, 0, 10), (0, 0));
    }

    #[test]
    fn bvc_classification() {
        let rec = |vote, m1, m2| VoteRecord {
            vote,
            k_equal: true,
            mp1_matches: m1,
            mp2_matches: m2,
        };
        assert_eq!(classify_bvc(&rec(Vote::V1, true, false)), 0);
        assert_eq!(classify_bvc(&rec(Vote::V1, false, false)), 1);
        assert_eq!(classify_bvc(&rec(Vote::None, true, false)), 1);
        assert_eq!(classify_bvc(&rec(Vote::V2, true, false)), 2);
        assert_eq!(classify_bvc(&rec(Vote::V2, false, true)), 0);
        let mut unequal = rec(Vote::None, true, true);
        unequal.k_equal = false;
        assert_eq!(classify_bvc(&unequal), 0);
    }

    fn trace(iter: u64, phi: f64, err: bool) -> IterationTrace {
        IterationTrace {
            iter,
            l_plus: 0,
            l_minus: 0,
            k_a: 0,
            k_b: 0,
            e_a: 0,
            e_b: 0,
            bvc: 0,
            bvc_added: 0,
            phi,
            had_error: err,
            had_collision: false,
            h1_collisions: 0,
            h2_collisions: 0,
            dangerous: false,
            corruptions: u64::from(err),
            computed: [true, true],
            len_a: 0,
            len_b: 0,
            resets: [false, false],
        }
    }

    #[test]
    fn lemma_checker_flags_stalls() {
        let c = PotentialConstants::default();
        let ts = vec![trace(0, 1.0, false), trace(1, 1.5, false), trace(2, -10.0, true)];
        let rep = check_lemmas(&ts, 0.0, &c, 10, 0.0, 100.0);
        assert_eq!(rep.clean_violations, vec![1]);
        assert_eq!(rep.max_drop, 11.5);
        assert!(!rep.ok());
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_iterations(&mut buf, &[trace(3, 2.0, true)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,l_plus,l_minus,kA,kB,EA,EB,bvc,phi,err,coll\n3,0,0,0,0,0,0,0,2,1,0\n"
        );
    }
}
