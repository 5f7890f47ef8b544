//! Lockstep execution of one scheme run with full ground-truth logging.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{frame, take_hash, unframe, HashLayout, Hashes, MeetingPoints, Scheme, SchemeParams, Status, Transition};
use crate::analysis::{
    self, classify_bvc, count_collisions, potential, simple_potential, CollisionCounts, IterationTrace, LemmaReport,
    PotentialInputs, Vote, VoteRecord,
};
use crate::bits::BitString;
use crate::channel::{Adversary, AdversaryBudget, AttackInsight, Channel, ChannelEvent, Phase, RoundAction};
use crate::hashing::{extended_eval, ip_hash_from_eval, HashValue, InnerProductHashSpec, NnHasher};
use crate::protocol::{pad_with_confirmations, InputProtocol, Party, ProtocolFamily, Symbol, Transcript};
use crate::randex::{self, rng_for, SharedRandomness};
use crate::smallbias::{BiasedGenerator, Elem, PrefixEvals};
use crate::Result;

const STREAM_SETUP: u64 = 1;
const STREAM_EXCHANGE: u64 = 2;
const STREAM_PRIVATE: [u64; 2] = [3, 4];

/// Per-run choices besides the scheme sizes and the adversary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RunInputs {
    pub family: ProtocolFamily,
    /// Master seed; protocol key, inputs, exchanged seed and both parties'
    /// private randomness derive from it.
    pub seed: u64,
    pub record_events: bool,
}

/// Outcome of one run.
#[derive(Clone, Debug, Serialize)]
pub struct SimulationResult {
    pub scheme: Scheme,
    /// Both transcripts start with the noiseless execution of the protocol.
    pub success: bool,
    /// Longest common prefix of the final transcripts.
    pub agreed_prefix: usize,
    pub final_len: [usize; 2],
    pub total_rounds: u64,
    pub rounds_used: u64,
    pub budget: AdversaryBudget,
    pub corruptions: u64,
    pub exchange_corruptions: u64,
    pub exchange_agreed: bool,
    /// Shared-randomness cursors at the end, Alice then Bob.
    pub cursors: [u64; 2],
    pub collisions: CollisionCounts,
    /// Largest `|T_A| − |T_B|` seen at an iteration boundary.
    pub max_len_gap: usize,
    pub phi0: f64,
    pub traces: Vec<IterationTrace>,
    #[serde(skip)]
    pub events: Vec<ChannelEvent>,
}

impl SimulationResult {
    /// Potential lemma checks against `params`.
    pub fn lemma_report(&self, params: &SchemeParams) -> LemmaReport {
        let c = &params.config.potential;
        let n_eps = params.n as f64 * params.eps;
        let drop = match params.scheme {
            Scheme::A1 => 3.0,
            _ => c.drop_bound(),
        };
        analysis::check_lemmas(&self.traces, self.phi0, c, params.r_total, n_eps, drop)
    }

    pub fn final_phi(&self) -> f64 {
        self.traces.last().map_or(self.phi0, |t| t.phi)
    }
}

/// Inner product hashing against one party's copy of the shared string.
struct SharedHasher {
    sr: SharedRandomness,
    prefix: PrefixEvals,
    spec: InnerProductHashSpec,
    step: Elem,
    stride: Elem,
    next_start: Elem,
    a64: Elem,
}

impl SharedHasher {
    fn new(sr: SharedRandomness, spec: InnerProductHashSpec) -> Self {
        let gen = sr.generator();
        Self {
            prefix: PrefixEvals::new(gen),
            step: gen.pow_a(spec.window_width() as u64),
            stride: gen.pow_a(spec.required_seed_len() as u64),
            next_start: gen.field().one(),
            a64: gen.pow_a(64),
            spec,
            sr,
        }
    }

    /// Draws this iteration's seed and returns `a^start`.
    fn begin(&mut self) -> Result<Elem> {
        self.sr.next_seed(self.spec.required_seed_len() as u64)?;
        let start = self.next_start.clone();
        self.next_start = self.sr.generator().field().mul(&start, &self.stride);
        Ok(start)
    }

    fn hash_bits(&mut self, start: &Elem, bits: &BitString, len: usize) -> HashValue {
        let gen = self.sr.generator();
        let eval = self.prefix.eval_prefix(gen, bits, len);
        let a_len = self.prefix.power(gen, len);
        let ext = extended_eval(gen, &self.spec, &eval, len, &a_len);
        ip_hash_from_eval(gen, &self.spec, start, &self.step, &ext)
    }

    fn hash_k(&self, start: &Elem, k: u64) -> HashValue {
        let gen = self.sr.generator();
        let ext = extended_eval(gen, &self.spec, &gen.word_eval(k), 64, &self.a64);
        ip_hash_from_eval(gen, &self.spec, start, &self.step, &ext)
    }
}

/// Seed columns of the next iteration's transcript hash, as seen by an
/// adversary that read the exchanged seed off the wire.
struct ColumnOracle {
    gen: BiasedGenerator,
    spec: InnerProductHashSpec,
    windows: Vec<Elem>,
    pows64: Vec<Elem>,
}

impl ColumnOracle {
    fn new(gen: BiasedGenerator, spec: InnerProductHashSpec, max_bits: usize) -> Self {
        let field = gen.field();
        let a64 = gen.pow_a(64);
        let mut pows64 = vec![field.one()];
        for _ in 0..max_bits / 64 + 1 {
            let next = field.mul(pows64.last().unwrap(), &a64);
            pows64.push(next);
        }
        Self {
            gen,
            spec,
            windows: Vec::new(),
            pows64,
        }
    }

    fn prepare(&mut self, cursor: u64) {
        let field = self.gen.field();
        let step = self.gen.pow_a(self.spec.window_width() as u64);
        let mut w = self.gen.pow_a(cursor);
        self.windows.clear();
        for _ in 0..self.spec.output_len() {
            let next = field.mul(&w, &step);
            self.windows.push(std::mem::replace(&mut w, next));
        }
    }

    fn column(&self, bit: usize) -> u128 {
        let field = self.gen.field();
        let (_, b) = self.gen.seed();
        let pos = field.mul(&self.pows64[bit / 64], self.gen.small_power(bit % 64));
        let mut col = 0u128;
        for (i, w) in self.windows.iter().enumerate() {
            if field.inner(&field.mul(w, &pos), b) {
                col |= 1 << i;
            }
        }
        col
    }
}

struct Insight<'a> {
    transcripts: [&'a Transcript; 2],
    computing: [bool; 2],
    n: usize,
    oracle: Option<&'a ColumnOracle>,
}

impl AttackInsight for Insight<'_> {
    fn transcripts(&self) -> [&Transcript; 2] {
        self.transcripts
    }

    fn computing(&self) -> [bool; 2] {
        self.computing
    }

    fn protocol_len(&self) -> usize {
        self.n
    }

    fn next_seed_column(&self, bit: usize) -> Option<u128> {
        self.oracle.map(|o| o.column(bit))
    }
}

struct PartyState {
    id: Party,
    input: u64,
    t: Transcript,
    status: Status,
    bvc: u64,
    rng: ChaCha8Rng,
    shared: Option<SharedHasher>,
}

impl PartyState {
    fn rollback(&mut self, len: usize) -> Result<()> {
        self.t.rollback(len)?;
        if let Some(h) = &mut self.shared {
            h.prefix.truncate(self.t.bit_len());
        }
        Ok(())
    }

    fn random_bits(&mut self, len: usize) -> BitString {
        BitString::from_bools((0..len).map(|_| self.rng.gen::<bool>()))
    }
}

struct Engine<'a> {
    params: &'a SchemeParams,
    pi: InputProtocol,
    channel: Channel,
    parties: [PartyState; 2],
    lcp: usize,
    oracle: Option<ColumnOracle>,
    wants_insight: bool,
}

/// Ground-truth collision bookkeeping for one iteration.
#[derive(Default)]
struct CollisionTally {
    h1: u64,
    h2: u64,
    /// Bad or uncounted votes recorded by either party.
    bvc: u64,
}

impl Engine<'_> {
    fn bps(&self) -> usize {
        self.params.alphabet.bits_per_symbol() as usize
    }

    /// `T_p[1, x] = T_q[1, y]`.
    fn prefix_eq(&self, x: usize, y: usize) -> bool {
        x == y && self.lcp >= x
    }

    fn update_lcp(&mut self) {
        let [a, b] = [&self.parties[0].t, &self.parties[1].t];
        let m = a.len().min(b.len());
        let mut l = self.lcp.min(m);
        let (sa, sb) = (a.symbols(), b.symbols());
        while l < m && sa[l] == sb[l] {
            l += 1;
        }
        self.lcp = l;
    }

    fn verification(&mut self, iter: u64, msgs: [Vec<Symbol>; 2]) -> Result<[Vec<Symbol>; 2]> {
        let r_c = self.params.r_c;
        let mut to_b = Vec::with_capacity(r_c);
        let mut to_a = Vec::with_capacity(r_c);
        for (j, &s) in msgs[0].iter().enumerate() {
            let phase = Phase::Verification { iter, offset: j };
            let e = self.channel.transmit(RoundAction::Send(s), RoundAction::Listen, phase, None)?;
            to_b.push(e.delivered_to_bob.unwrap_or(0));
        }
        for (j, &s) in msgs[1].iter().enumerate() {
            let phase = Phase::Verification { iter, offset: r_c + j };
            let e = self.channel.transmit(RoundAction::Listen, RoundAction::Send(s), phase, None)?;
            to_a.push(e.delivered_to_alice.unwrap_or(0));
        }
        Ok([to_a, to_b])
    }

    fn computation(&mut self, iter: u64, computing: [bool; 2]) -> Result<()> {
        for j in 0..self.params.r {
            let mut actions = [RoundAction::Listen; 2];
            for (p, party) in self.parties.iter().enumerate() {
                actions[p] = if computing[p] {
                    match party.t.next_action(&self.pi, party.id, party.input) {
                        Some(s) => RoundAction::Send(s),
                        None => RoundAction::Listen,
                    }
                } else if self.pi.sender(party.t.len() + j) == party.id {
                    RoundAction::Send(0)
                } else {
                    RoundAction::Listen
                };
            }
            let phase = Phase::Computation { iter, offset: j };
            let event = if self.wants_insight {
                let insight = Insight {
                    transcripts: [&self.parties[0].t, &self.parties[1].t],
                    computing,
                    n: self.params.n,
                    oracle: self.oracle.as_ref(),
                };
                self.channel.transmit(actions[0], actions[1], phase, Some(&insight))?
            } else {
                self.channel.transmit(actions[0], actions[1], phase, None)?
            };
            let delivered = [event.delivered_to_alice, event.delivered_to_bob];
            for p in 0..2 {
                if computing[p] {
                    let sym = match actions[p] {
                        RoundAction::Send(s) => s,
                        RoundAction::Listen => delivered[p].unwrap_or(0),
                    };
                    self.parties[p].t.push(&self.pi, sym);
                }
            }
        }
        self.update_lcp();
        Ok(())
    }

    fn a1_iteration(&mut self, iter: u64) -> Result<(CollisionTally, [bool; 2], [bool; 2])> {
        let HashLayout::A1 { params, len_bits } = self.params.hash else {
            unreachable!()
        };
        let (alphabet, r_c) = (self.params.alphabet, self.params.r_c);
        let mut seeds = Vec::with_capacity(2);
        let mut sent = Vec::with_capacity(2);
        let mut msgs: [Vec<Symbol>; 2] = Default::default();
        for (p, party) in self.parties.iter_mut().enumerate() {
            let seed = party.random_bits(params.seed_len());
            let h = NnHasher::new(&params, &seed)?.hash_prefix(party.t.bits(), party.t.bit_len())?;
            let mut bits = seed.clone();
            bits.extend_from(&h.to_bitstring());
            bits.push_bits(party.t.len() as u64, len_bits);
            msgs[p] = frame(&bits, alphabet, r_c);
            seeds.push(seed);
            sent.push(h);
        }
        let recv = self.verification(iter, msgs)?;
        let mut matched = [false; 2];
        let mut their_len = [0usize; 2];
        let mut tally = CollisionTally::default();
        let lens = [self.parties[0].t.len(), self.parties[1].t.len()];
        let same = self.prefix_eq(lens[0], lens[1]);
        for p in 0..2 {
            let q = 1 - p;
            let bits = unframe(&recv[p], alphabet);
            let seed = bits.slice(0, params.seed_len());
            let mut pos = params.seed_len();
            let h_recv = take_hash(&bits, &mut pos, params.output_len());
            their_len[p] = bits.read_bits(pos, len_bits) as usize;
            let party = &self.parties[p];
            let own = NnHasher::new(&params, &seed)?.hash_prefix(party.t.bits(), party.t.bit_len())?;
            matched[p] = own == h_recv;
            if !same && seed == seeds[q] && h_recv == sent[q] && own == sent[q] {
                tally.h1 += 1;
            }
        }
        self.computation(iter, matched)?;
        let mut rolled = [false; 2];
        for p in 0..2 {
            if !matched[p] && lens[p] >= their_len[p] {
                let to = lens[p].saturating_sub(self.params.r);
                self.parties[p].rollback(to)?;
                rolled[p] = true;
            }
        }
        self.update_lcp();
        Ok((tally, rolled, matched))
    }

    fn layer1(&mut self, p: usize, start: &Elem, mp: &MeetingPoints) -> Hashes {
        let bps = self.bps();
        let party = &mut self.parties[p];
        let h = party.shared.as_mut().expect("shared hasher");
        Hashes {
            k: h.hash_k(start, party.status.k),
            t: h.hash_bits(start, party.t.bits(), party.t.bit_len()),
            mp1: h.hash_bits(start, party.t.bits(), mp.mp1 * bps),
            mp2: h.hash_bits(start, party.t.bits(), mp.mp2 * bps),
        }
    }

    fn shared_iteration(&mut self, iter: u64) -> Result<(CollisionTally, [bool; 2], [bool; 2])> {
        let (alphabet, r_c, r) = (self.params.alphabet, self.params.r_c, self.params.r);
        let a4 = match self.params.hash {
            HashLayout::A4 { params2, .. } => Some(params2),
            _ => None,
        };
        let mut mps = [MeetingPoints::new(1, 0, r); 2];
        let mut l1 = Vec::with_capacity(2);
        let mut sent = Vec::with_capacity(2);
        let mut s2 = Vec::with_capacity(2);
        let mut msgs: [Vec<Symbol>; 2] = Default::default();
        for p in 0..2 {
            self.parties[p].status.k += 1;
            mps[p] = MeetingPoints::new(self.parties[p].status.k, self.parties[p].t.len(), r);
            let start = self.parties[p].shared.as_mut().expect("shared hasher").begin()?;
            let first = self.layer1(p, &start, &mps[p]);
            let mut bits = BitString::new();
            let out = match a4 {
                None => first,
                Some(params2) => {
                    let seed = self.parties[p].random_bits(params2.seed_len());
                    let h2 = NnHasher::new(&params2, &seed)?;
                    bits.extend_from(&seed);
                    s2.push(seed);
                    second_layer(&h2, &first)?
                }
            };
            for h in [out.k, out.t, out.mp1, out.mp2] {
                bits.extend_from(&h.to_bitstring());
            }
            msgs[p] = frame(&bits, alphabet, r_c);
            l1.push(first);
            sent.push(out);
        }
        if let Some(oracle) = &mut self.oracle {
            let cursor = self.parties[0].shared.as_ref().unwrap().sr.cursor();
            oracle.prepare(cursor);
        }
        let recv = self.verification(iter, msgs)?;
        let o = match self.params.hash {
            HashLayout::A3 { spec } => spec.output_len(),
            HashLayout::A4 { params2, .. } => params2.output_len(),
            HashLayout::A1 { .. } => unreachable!(),
        };
        let lens = [self.parties[0].t.len(), self.parties[1].t.len()];
        let ks = [self.parties[0].status.k, self.parties[1].status.k];
        let mut tally = CollisionTally::default();
        let mut computing = [false; 2];
        let mut votes = [Vote::None; 2];
        for p in 0..2 {
            let q = 1 - p;
            let bits = unframe(&recv[p], alphabet);
            let mut pos = 0;
            let mut seed_ok = true;
            let own = match a4 {
                None => l1[p],
                Some(params2) => {
                    let seed = bits.slice(0, params2.seed_len());
                    pos = params2.seed_len();
                    seed_ok = seed == s2[q];
                    second_layer(&NnHasher::new(&params2, &seed)?, &l1[p])?
                }
            };
            let got = Hashes {
                k: take_hash(&bits, &mut pos, o),
                t: take_hash(&bits, &mut pos, o),
                mp1: take_hash(&bits, &mut pos, o),
                mp2: take_hash(&bits, &mut pos, o),
            };
            votes[p] = self.parties[p].status.apply_votes(&own, &got);
            computing[p] = self.parties[p].status.should_compute(own.t == got.t);

            // (own value differs, own hash, own layer-1, their sent, their received, their layer-1)
            let mut pairs = vec![
                (ks[p] != ks[q], own.k, l1[p].k, sent[q].k, got.k, l1[q].k),
                (!self.prefix_eq(lens[p], lens[q]), own.t, l1[p].t, sent[q].t, got.t, l1[q].t),
            ];
            if own.k == got.k {
                let (m1, m2) = (mps[p].mp1, mps[p].mp2);
                let (n1, n2) = (mps[q].mp1, mps[q].mp2);
                // A membership test only goes wrong when no true match exists.
                let miss1 = !self.prefix_eq(m1, n1) && !self.prefix_eq(m1, n2);
                pairs.push((miss1, own.mp1, l1[p].mp1, sent[q].mp1, got.mp1, l1[q].mp1));
                pairs.push((miss1, own.mp1, l1[p].mp1, sent[q].mp2, got.mp2, l1[q].mp2));
                if votes[p] != Vote::V1 {
                    let miss2 = !self.prefix_eq(m2, n1) && !self.prefix_eq(m2, n2);
                    pairs.push((miss2, own.mp2, l1[p].mp2, sent[q].mp1, got.mp1, l1[q].mp1));
                    pairs.push((miss2, own.mp2, l1[p].mp2, sent[q].mp2, got.mp2, l1[q].mp2));
                }
            }
            for (differs, mine, mine1, theirs, received, theirs1) in pairs {
                if differs && seed_ok && received == theirs && mine == theirs {
                    if mine1 == theirs1 {
                        tally.h1 += 1;
                    } else {
                        tally.h2 += 1;
                    }
                }
            }
        }
        let mut delta = 0;
        for p in 0..2 {
            let q = 1 - p;
            let record = VoteRecord {
                vote: votes[p],
                k_equal: ks[0] == ks[1],
                mp1_matches: self.prefix_eq(mps[p].mp1, mps[q].mp1) || self.prefix_eq(mps[p].mp1, mps[q].mp2),
                mp2_matches: self.prefix_eq(mps[p].mp2, mps[q].mp1) || self.prefix_eq(mps[p].mp2, mps[q].mp2),
            };
            delta += classify_bvc(&record);
        }
        for party in &mut self.parties {
            party.bvc += delta;
        }
        tally.bvc = delta;

        self.computation(iter, computing)?;

        let threshold = self.params.config.vote_threshold;
        let mut resets = [false; 2];
        for p in 0..2 {
            let party = &mut self.parties[p];
            if computing[p] {
                party.status.reset();
            }
            let tr = party.status.transition(mps[p].k_tilde, threshold);
            match tr {
                Transition::RollbackMp1 => party.rollback(mps[p].mp1)?,
                Transition::RollbackMp2 => party.rollback(mps[p].mp2)?,
                _ => {}
            }
            if tr.resets_status() {
                party.bvc = 0;
                resets[p] = true;
            }
        }
        self.update_lcp();
        Ok((tally, resets, computing))
    }

    fn snapshot(&self) -> PotentialInputs {
        let [a, b] = &self.parties;
        let (l_plus, l_minus) = PotentialInputs::blocks(self.lcp, a.t.len(), b.t.len(), self.params.r);
        PotentialInputs {
            l_plus,
            l_minus,
            k: [a.status.k, b.status.k],
            e: [a.status.e, b.status.e],
            bvc: [a.bvc, b.bvc],
        }
    }

    fn phi(&self, s: &PotentialInputs) -> f64 {
        match self.params.scheme {
            Scheme::A1 => simple_potential(s.l_plus, s.l_minus),
            _ => potential(s, &self.params.config.potential),
        }
    }
}

fn second_layer(h2: &NnHasher, first: &Hashes) -> Result<Hashes> {
    Ok(Hashes {
        k: h2.hash(&first.k.to_bitstring())?,
        t: h2.hash(&first.t.to_bitstring())?,
        mp1: h2.hash(&first.mp1.to_bitstring())?,
        mp2: h2.hash(&first.mp2.to_bitstring())?,
    })
}

/// Runs one full simulation: exchange (if any), then `R_total` iterations.
pub fn run_simulation(params: &SchemeParams, inputs: &RunInputs, adversary: Box<dyn Adversary>) -> Result<SimulationResult> {
    let mut setup = rng_for(inputs.seed, STREAM_SETUP);
    let key: u64 = setup.gen();
    let party_inputs: [u64; 2] = [setup.gen(), setup.gen()];
    let base = InputProtocol::new(inputs.family, params.alphabet, params.n, key);
    let pi = pad_with_confirmations(&base, params.padded_len)?;
    let reference = base.execute(party_inputs);

    let mut channel = Channel::new(adversary, params.eps, params.total_rounds, params.alphabet, inputs.record_events);
    let wants_insight = channel.wants_insight();

    let mut shared = [None, None];
    let mut oracle = None;
    let mut exchange_corruptions = 0;
    let mut exchange_agreed = true;
    if let Some(plan) = &params.exchange {
        let spec = match params.hash {
            HashLayout::A3 { spec } => spec,
            HashLayout::A4 { spec1, .. } => spec1,
            HashLayout::A1 { .. } => unreachable!("large-alphabet scheme has no exchange"),
        };
        let seed = plan.sample_seed(&mut rng_for(inputs.seed, STREAM_EXCHANGE));
        let out = randex::exchange(plan, &seed, &mut channel)?;
        exchange_corruptions = out.corruptions;
        exchange_agreed = out.agreed();
        if wants_insight && plan.mode.is_exposed() {
            let max_bits = params.padded_len * params.alphabet.bits_per_symbol() as usize;
            oracle = Some(ColumnOracle::new(out.alice.generator().clone(), spec, max_bits));
        }
        shared = [Some(SharedHasher::new(out.alice, spec)), Some(SharedHasher::new(out.bob, spec))];
    }
    let [sa, sb] = shared;
    let make = |id: Party, sh| PartyState {
        id,
        input: party_inputs[id.index()],
        t: Transcript::new(params.alphabet),
        status: Status::default(),
        bvc: 0,
        rng: rng_for(inputs.seed, STREAM_PRIVATE[id.index()]),
        shared: sh,
    };
    let mut engine = Engine {
        params,
        pi,
        channel,
        parties: [make(Party::Alice, sa), make(Party::Bob, sb)],
        lcp: 0,
        oracle,
        wants_insight,
    };

    let phi0 = engine.phi(&engine.snapshot());
    let mut traces = Vec::with_capacity(params.r_total as usize);
    let mut max_len_gap = 0;
    for iter in 0..params.r_total {
        let before = engine.snapshot();
        let dangerous = before.l_minus > 0 || before.k[0] + before.k[1] > 0;
        let corr_before = engine.channel.corruptions();
        let (tally, resets, computed) = match params.scheme {
            Scheme::A1 => engine.a1_iteration(iter)?,
            _ => engine.shared_iteration(iter)?,
        };
        let s = engine.snapshot();
        let (la, lb) = (engine.parties[0].t.len(), engine.parties[1].t.len());
        max_len_gap = max_len_gap.max(la.abs_diff(lb));
        let corruptions = engine.channel.corruptions() - corr_before;
        traces.push(IterationTrace {
            iter,
            l_plus: s.l_plus,
            l_minus: s.l_minus,
            k_a: s.k[0],
            k_b: s.k[1],
            e_a: s.e[0],
            e_b: s.e[1],
            bvc: s.bvc[0] + s.bvc[1],
            bvc_added: tally.bvc,
            phi: engine.phi(&s),
            had_error: corruptions > 0,
            had_collision: tally.h1 + tally.h2 > 0,
            h1_collisions: tally.h1,
            h2_collisions: tally.h2,
            dangerous,
            corruptions,
            computed,
            len_a: la,
            len_b: lb,
            resets,
        });
    }
    debug_assert_eq!(engine.channel.round(), params.total_rounds);

    let n = params.n;
    let ok = |t: &Transcript| t.len() >= n && t.symbols()[..n] == reference.symbols()[..n];
    let success = ok(&engine.parties[0].t) && ok(&engine.parties[1].t);
    let cursor = |p: &PartyState| p.shared.as_ref().map_or(0, |h| h.sr.cursor());
    Ok(SimulationResult {
        scheme: params.scheme,
        success,
        agreed_prefix: engine.lcp,
        final_len: [engine.parties[0].t.len(), engine.parties[1].t.len()],
        total_rounds: params.total_rounds,
        rounds_used: engine.channel.round(),
        budget: engine.channel.budget(),
        corruptions: engine.channel.corruptions(),
        exchange_corruptions,
        exchange_agreed,
        cursors: [cursor(&engine.parties[0]), cursor(&engine.parties[1])],
        collisions: count_collisions(&traces),
        max_len_gap,
        phi0,
        traces,
        events: engine.channel.take_log(),
    })
}
