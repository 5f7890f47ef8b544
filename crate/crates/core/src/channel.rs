//! Round-exact channel with adversaries and budget accounting.
//!
//! Every round both parties pick an action. One sender and one listener is
//! an ordinary delivery the adversary may corrupt at a cost of one unit of
//! budget. Two senders deliver nothing. Two listeners receive fill symbols
//! chosen by the adversary for free.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::protocol::{Alphabet, Party, Symbol, Transcript};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RoundAction {
    Send(Symbol),
    Listen,
}

impl RoundAction {
    pub fn sent(self) -> Option<Symbol> {
        match self {
            RoundAction::Send(s) => Some(s),
            RoundAction::Listen => None,
        }
    }
}

/// Position of a round in the scheme's fixed schedule. Public knowledge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    Exchange,
    Verification { iter: u64, offset: usize },
    Computation { iter: u64, offset: usize },
}

/// One resolved round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChannelEvent {
    pub round: u64,
    pub alice: RoundAction,
    pub bob: RoundAction,
    pub delivered_to_alice: Option<Symbol>,
    pub delivered_to_bob: Option<Symbol>,
    pub corrupted: bool,
}

impl ChannelEvent {
    pub fn sender_label(&self) -> &'static str {
        match (self.alice, self.bob) {
            (RoundAction::Send(_), RoundAction::Listen) => "A",
            (RoundAction::Listen, RoundAction::Send(_)) => "B",
            (RoundAction::Send(_), RoundAction::Send(_)) => "both",
            (RoundAction::Listen, RoundAction::Listen) => "none",
        }
    }

    /// `round,sender,sent,delivered_A,delivered_B,corrupted`; absent symbols
    /// are written as `-`, two senders as `a/b`.
    pub fn csv_row(&self) -> String {
        let opt = |s: Option<Symbol>| s.map_or_else(|| "-".to_string(), |v| v.to_string());
        let sent = match (self.alice.sent(), self.bob.sent()) {
            (Some(a), Some(b)) => format!("{a}/{b}"),
            (a, b) => opt(a.or(b)),
        };
        format!(
            "{},{},{},{},{},{}",
            self.round,
            self.sender_label(),
            sent,
            opt(self.delivered_to_alice),
            opt(self.delivered_to_bob),
            u8::from(self.corrupted)
        )
    }
}

pub const TRACE_HEADER: &str = "round,sender,sent,delivered_A,delivered_B,corrupted";

pub fn write_trace<W: Write>(mut out: W, events: &[ChannelEvent]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(out, "{}", e.csv_row())?;
    }
    Ok(())
}

/// Corruption allowance `⌊εN⌋` and the amount used so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AdversaryBudget {
    pub total: u64,
    pub spent: u64,
    pub enforced: bool,
}

impl AdversaryBudget {
    pub fn new(eps: f64, total_rounds: u64) -> Self {
        Self {
            total: (eps * total_rounds as f64 + 1e-9).floor() as u64,
            spent: 0,
            enforced: true,
        }
    }

    pub fn unenforced(eps: f64, total_rounds: u64) -> Self {
        Self {
            enforced: false,
            ..Self::new(eps, total_rounds)
        }
    }

    pub fn remaining(&self) -> u64 {
        if self.enforced {
            self.total - self.spent
        } else {
            u64::MAX
        }
    }

    pub fn charge(&mut self) -> Result<()> {
        if self.enforced && self.spent >= self.total {
            return Err(Error::BudgetExceeded { total: self.total });
        }
        self.spent += 1;
        Ok(())
    }
}

/// Extra knowledge a seed-aware adversary derives from what it observed.
pub trait AttackInsight {
    fn transcripts(&self) -> [&Transcript; 2];
    /// Whether each party runs the protocol (rather than dummy rounds) in
    /// the current computation phase.
    fn computing(&self) -> [bool; 2];
    /// Prefix length below which corruptions matter.
    fn protocol_len(&self) -> usize;
    /// Bits of the next iteration's transcript-hash seed windows at
    /// transcript bit `bit`, one per output bit; `None` if the seed is not
    /// known in advance.
    fn next_seed_column(&self, bit: usize) -> Option<u128>;
}

/// What an adversary sees when a single party sends.
pub struct RoundContext<'a> {
    pub round: u64,
    pub total_rounds: u64,
    pub phase: Phase,
    pub sender: Party,
    pub sent: Symbol,
    pub alphabet: Alphabet,
    pub budget_left: u64,
    pub insight: Option<&'a dyn AttackInsight>,
}

pub trait Adversary: Send {
    fn name(&self) -> &'static str;

    /// Whether corruptions are capped by `⌊εN⌋`.
    fn is_budgeted(&self) -> bool {
        true
    }

    /// Called once with the announced run length and budget.
    fn start(&mut self, _total_rounds: u64, _budget: u64, _alphabet: Alphabet) {}

    /// XOR mask for the delivered symbol; `None` or `Some(0)` leaves it intact.
    fn corrupt(&mut self, ctx: &RoundContext<'_>) -> Option<Symbol>;

    /// Symbols heard by Alice and Bob when nobody sends.
    fn fill(&mut self, _round: u64) -> (Symbol, Symbol) {
        (0, 0)
    }

    /// Rounds fixed in advance, for adversaries that commit before round 0.
    fn committed_rounds(&self) -> Option<Vec<u64>> {
        None
    }

    /// Whether [`RoundContext::insight`] should be populated.
    fn wants_insight(&self) -> bool {
        false
    }
}

pub struct Noiseless;

impl Adversary for Noiseless {
    fn name(&self) -> &'static str {
        "none"
    }

    fn corrupt(&mut self, _ctx: &RoundContext<'_>) -> Option<Symbol> {
        None
    }
}

fn random_mask(rng: &mut ChaCha8Rng, alphabet: Alphabet) -> Symbol {
    loop {
        let m = rng.gen::<u64>() & alphabet.mask();
        if m != 0 {
            return m;
        }
    }
}

/// Independent bit flips with probability ε on every delivered bit.
pub struct RandomBsc {
    eps: f64,
    rng: ChaCha8Rng,
}

impl RandomBsc {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self {
            eps,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Adversary for RandomBsc {
    fn name(&self) -> &'static str {
        "bsc"
    }

    fn is_budgeted(&self) -> bool {
        false
    }

    fn corrupt(&mut self, ctx: &RoundContext<'_>) -> Option<Symbol> {
        let mut mask = 0;
        for b in 0..ctx.alphabet.bits_per_symbol() {
            if self.rng.gen_bool(self.eps) {
                mask |= 1 << b;
            }
        }
        Some(mask)
    }
}

/// Corruptions at rounds fixed before the run. Rounds where the schedule
/// happens not to have exactly one sender are skipped.
pub struct Oblivious {
    kind: ObliviousKind,
    rng: ChaCha8Rng,
    plan: Vec<(u64, Symbol)>,
    next: usize,
}

#[derive(Clone, Copy, Debug)]
pub enum ObliviousKind {
    /// `⌊εN⌋` consecutive rounds at a random offset.
    Burst,
    /// `min(Binomial(N, ε), ⌊εN⌋)` uniformly random rounds.
    RandomSet { eps: f64 },
    /// An explicit list.
    Fixed,
}

impl Oblivious {
    pub fn burst(seed: u64) -> Self {
        Self::with_kind(ObliviousKind::Burst, seed)
    }

    pub fn random_set(eps: f64, seed: u64) -> Self {
        Self::with_kind(ObliviousKind::RandomSet { eps }, seed)
    }

    /// Corrupts exactly the listed rounds with the given masks.
    pub fn fixed(mut plan: Vec<(u64, Symbol)>) -> Self {
        plan.sort_unstable();
        Self {
            plan,
            ..Self::with_kind(ObliviousKind::Fixed, 0)
        }
    }

    fn with_kind(kind: ObliviousKind, seed: u64) -> Self {
        Self {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            plan: Vec::new(),
            next: 0,
        }
    }
}

impl Adversary for Oblivious {
    fn name(&self) -> &'static str {
        match self.kind {
            ObliviousKind::Burst => "burst",
            ObliviousKind::RandomSet { .. } => "oblivious",
            ObliviousKind::Fixed => "fixed",
        }
    }

    fn start(&mut self, total_rounds: u64, budget: u64, alphabet: Alphabet) {
        let budget = budget.min(total_rounds);
        let rounds: Vec<u64> = match self.kind {
            ObliviousKind::Fixed => {
                self.plan.retain(|&(r, _)| r < total_rounds);
                self.plan.truncate(budget as usize);
                return;
            }
            ObliviousKind::Burst => {
                let start = self.rng.gen_range(0..=total_rounds - budget);
                (start..start + budget).collect()
            }
            ObliviousKind::RandomSet { eps } => {
                let count = Binomial::new(total_rounds, eps.clamp(0.0, 1.0))
                    .map(|d| d.sample(&mut self.rng))
                    .unwrap_or(0);
                let k = count.min(budget) as usize;
                let mut v: Vec<u64> = index::sample(&mut self.rng, total_rounds as usize, k)
                    .into_iter()
                    .map(|r| r as u64)
                    .collect();
                v.sort_unstable();
                v
            }
        };
        self.plan = rounds
            .into_iter()
            .map(|r| (r, random_mask(&mut self.rng, alphabet)))
            .collect();
    }

    fn corrupt(&mut self, ctx: &RoundContext<'_>) -> Option<Symbol> {
        while self.next < self.plan.len() && self.plan[self.next].0 < ctx.round {
            self.next += 1;
        }
        match self.plan.get(self.next) {
            Some(&(r, m)) if r == ctx.round => {
                self.next += 1;
                Some(m)
            }
            _ => None,
        }
    }

    fn committed_rounds(&self) -> Option<Vec<u64>> {
        Some(self.plan.iter().map(|p| p.0).collect())
    }
}

/// From `split_round` on, garbles everything Bob sends to Alice and leaves
/// Bob's view intact, until the budget runs out.
pub struct MitmDesync {
    split_round: Option<u64>,
    rng: ChaCha8Rng,
}

impl MitmDesync {
    /// `None` draws the split uniformly from the first half of the run.
    pub fn new(split_round: Option<u64>, seed: u64) -> Self {
        Self {
            split_round,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

pub fn mitm_desync_adversary(split_round: u64, seed: u64) -> MitmDesync {
    MitmDesync::new(Some(split_round), seed)
}

impl Adversary for MitmDesync {
    fn name(&self) -> &'static str {
        "mitm"
    }

    fn start(&mut self, total_rounds: u64, _budget: u64, _alphabet: Alphabet) {
        if self.split_round.is_none() {
            self.split_round = Some(self.rng.gen_range(0..(total_rounds / 2).max(1)));
        }
    }

    fn corrupt(&mut self, ctx: &RoundContext<'_>) -> Option<Symbol> {
        let split = self.split_round.unwrap_or(0);
        let active = ctx.round >= split
            && ctx.sender == Party::Bob
            && ctx.budget_left > 0
            && ctx.phase != Phase::Exchange;
        active.then(|| random_mask(&mut self.rng, ctx.alphabet))
    }
}

/// Seed-aware hash attacker.
///
/// When the next iteration's hash seed is known it corrupts a computation
/// round exactly when doing so makes the difference between the two
/// transcripts invisible to that seed, so the corruption survives
/// verification as a hash collision. Without seed knowledge it plants one
/// corruption per in-sync iteration and hopes for a collision.
pub struct GreedyHashAttacker {
    last_blind_iter: Option<u64>,
}

impl GreedyHashAttacker {
    pub fn new() -> Self {
        Self {
            last_blind_iter: None,
        }
    }
}

impl Default for GreedyHashAttacker {
    fn default() -> Self {
        Self::new()
    }
}

/// XOR of the seed columns over all bit positions where the transcripts differ.
fn syndrome(insight: &dyn AttackInsight, a: &Transcript, b: &Transcript) -> Option<u128> {
    let (wa, wb) = (a.bits().words(), b.bits().words());
    let mut acc = 0u128;
    for (w, (x, y)) in wa.iter().zip(wb).enumerate() {
        let mut d = x ^ y;
        while d != 0 {
            let t = d.trailing_zeros() as usize;
            acc ^= insight.next_seed_column(64 * w + t)?;
            d &= d - 1;
        }
    }
    Some(acc)
}

impl Adversary for GreedyHashAttacker {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn wants_insight(&self) -> bool {
        true
    }

    fn corrupt(&mut self, ctx: &RoundContext<'_>) -> Option<Symbol> {
        let Phase::Computation { iter, .. } = ctx.phase else {
            return None;
        };
        let insight = ctx.insight?;
        if ctx.budget_left == 0 || insight.computing() != [true, true] {
            return None;
        }
        let [ta, tb] = insight.transcripts();
        let q = ta.len();
        if tb.len() != q || q >= insight.protocol_len() {
            return None;
        }
        let bit = q * ctx.alphabet.bits_per_symbol() as usize;
        match insight.next_seed_column(bit) {
            Some(col) => {
                let synd = syndrome(insight, ta, tb)?;
                let in_sync = ta.bits() == tb.bits();
                (col == synd && (in_sync || synd != 0)).then_some(1)
            }
            None => {
                let in_sync = ta.bits() == tb.bits();
                if in_sync && self.last_blind_iter != Some(iter) {
                    self.last_blind_iter = Some(iter);
                    Some(1)
                } else {
                    None
                }
            }
        }
    }
}

/// Adversary selector used by the harness and CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdversaryKind {
    None,
    Bsc,
    Burst,
    /// Budgeted oblivious random set.
    Oblivious,
    Mitm,
    Greedy,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 6] = [
        AdversaryKind::None,
        AdversaryKind::Bsc,
        AdversaryKind::Burst,
        AdversaryKind::Oblivious,
        AdversaryKind::Mitm,
        AdversaryKind::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::None => "none",
            AdversaryKind::Bsc => "bsc",
            AdversaryKind::Burst => "burst",
            AdversaryKind::Oblivious => "oblivious",
            AdversaryKind::Mitm => "mitm",
            AdversaryKind::Greedy => "greedy",
        }
    }

    pub fn build(self, eps: f64, seed: u64) -> Box<dyn Adversary> {
        match self {
            AdversaryKind::None => Box::new(Noiseless),
            AdversaryKind::Bsc => Box::new(RandomBsc::new(eps, seed)),
            AdversaryKind::Burst => Box::new(Oblivious::burst(seed)),
            AdversaryKind::Oblivious => Box::new(Oblivious::random_set(eps, seed)),
            AdversaryKind::Mitm => Box::new(MitmDesync::new(None, seed)),
            AdversaryKind::Greedy => Box::new(GreedyHashAttacker::new()),
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown adversary {s:?}")))
    }
}

/// Resolves one round against the four-case table.
pub fn resolve_round(
    ctx_round: u64,
    alice: RoundAction,
    bob: RoundAction,
    adversary: &mut dyn Adversary,
    budget: &mut AdversaryBudget,
    view: RoundView<'_>,
) -> Result<ChannelEvent> {
    let mut event = ChannelEvent {
        round: ctx_round,
        alice,
        bob,
        delivered_to_alice: None,
        delivered_to_bob: None,
        corrupted: false,
    };
    match (alice, bob) {
        (RoundAction::Send(_), RoundAction::Send(_)) => {}
        (RoundAction::Listen, RoundAction::Listen) => {
            let (a, b) = adversary.fill(ctx_round);
            event.delivered_to_alice = Some(a & view.alphabet.mask());
            event.delivered_to_bob = Some(b & view.alphabet.mask());
        }
        (RoundAction::Send(s), RoundAction::Listen) | (RoundAction::Listen, RoundAction::Send(s)) => {
            let sender = if alice == RoundAction::Listen { Party::Bob } else { Party::Alice };
            let ctx = RoundContext {
                round: ctx_round,
                total_rounds: view.total_rounds,
                phase: view.phase,
                sender,
                sent: s,
                alphabet: view.alphabet,
                budget_left: budget.remaining(),
                insight: view.insight,
            };
            let mask = adversary.corrupt(&ctx).unwrap_or(0) & view.alphabet.mask();
            if mask != 0 {
                budget.charge()?;
                event.corrupted = true;
            }
            let got = Some(s ^ mask);
            match sender {
                Party::Alice => event.delivered_to_bob = got,
                Party::Bob => event.delivered_to_alice = got,
            }
        }
    }
    Ok(event)
}

/// Round metadata passed alongside the actions.
#[derive(Clone, Copy)]
pub struct RoundView<'a> {
    pub total_rounds: u64,
    pub phase: Phase,
    pub alphabet: Alphabet,
    pub insight: Option<&'a dyn AttackInsight>,
}

/// A channel for one run: adversary, budget, round counter and optional log.
pub struct Channel {
    adversary: Box<dyn Adversary>,
    budget: AdversaryBudget,
    alphabet: Alphabet,
    total_rounds: u64,
    round: u64,
    corruptions: u64,
    log: Option<Vec<ChannelEvent>>,
}

impl Channel {
    /// Announces `total_rounds` to the adversary and fixes the budget `⌊εN⌋`.
    pub fn new(mut adversary: Box<dyn Adversary>, eps: f64, total_rounds: u64, alphabet: Alphabet, record: bool) -> Self {
        let budget = if adversary.is_budgeted() {
            AdversaryBudget::new(eps, total_rounds)
        } else {
            AdversaryBudget::unenforced(eps, total_rounds)
        };
        adversary.start(total_rounds, budget.total, alphabet);
        Self {
            adversary,
            budget,
            alphabet,
            total_rounds,
            round: 0,
            corruptions: 0,
            log: record.then(Vec::new),
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn total_rounds(&self) -> u64 {
        self.total_rounds
    }

    pub fn budget(&self) -> AdversaryBudget {
        self.budget
    }

    pub fn corruptions(&self) -> u64 {
        self.corruptions
    }

    pub fn adversary_name(&self) -> &'static str {
        self.adversary.name()
    }

    pub fn committed_rounds(&self) -> Option<Vec<u64>> {
        self.adversary.committed_rounds()
    }

    pub fn wants_insight(&self) -> bool {
        self.adversary.wants_insight()
    }

    pub fn transmit(
        &mut self,
        alice: RoundAction,
        bob: RoundAction,
        phase: Phase,
        insight: Option<&dyn AttackInsight>,
    ) -> Result<ChannelEvent> {
        let view = RoundView {
            total_rounds: self.total_rounds,
            phase,
            alphabet: self.alphabet,
            insight,
        };
        let event = resolve_round(self.round, alice, bob, self.adversary.as_mut(), &mut self.budget, view)?;
        self.round += 1;
        self.corruptions += u64::from(event.corrupted);
        if let Some(log) = &mut self.log {
            log.push(event);
        }
        Ok(event)
    }

    pub fn take_log(&mut self) -> Vec<ChannelEvent> {
        self.log.take().unwrap_or_default()
    }
}
