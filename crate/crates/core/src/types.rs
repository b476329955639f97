//! Domain types shared by every module.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amount::{self, Amount};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub usize);

impl PartyId {
    pub fn checked(id: usize, n_parties: usize) -> Result<Self> {
        if id < n_parties {
            Ok(PartyId(id))
        } else {
            Err(Error::InvalidParam(format!(
                "party {id} out of range for {n_parties} parties"
            )))
        }
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

pub type AccountId = u32;
pub type AssetId = u32;
pub type TxId = u64;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transfer {
    pub source: AccountId,
    pub dest: AccountId,
    pub asset: AssetId,
    #[serde(with = "amount::serde_str")]
    pub amount: Amount,
}

impl Transfer {
    pub fn new(source: AccountId, dest: AccountId, asset: AssetId, amount: Amount) -> Result<Self> {
        if source == dest {
            return Err(Error::InvalidParam(format!(
                "transfer source equals dest ({source})"
            )));
        }
        if amount < amount::zero() {
            return Err(Error::NonPositiveAmount(amount::format(&amount)));
        }
        Ok(Transfer {
            source,
            dest,
            asset,
            amount,
        })
    }

    pub fn scaled(&self, factor: &Amount) -> Transfer {
        Transfer {
            amount: &self.amount * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::XToY => Direction::YToX,
            Direction::YToX => Direction::XToY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxKind {
    PlainTransfer {
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        #[serde(with = "amount::serde_str")]
        amount: Amount,
    },
    Swap {
        pool: usize,
        trader: AccountId,
        direction: Direction,
        #[serde(with = "amount::serde_str")]
        amount_in: Amount,
        /// Worst acceptable rate `amount_in / amount_out`; `None` is unbounded.
        #[serde(with = "amount::serde_str_opt", default)]
        max_rate: Option<Amount>,
    },
    Open {
        i: u64,
        j: usize,
        #[serde(with = "hex_bytes")]
        sigma: Vec<u8>,
    },
    Noop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub submitter: PartyId,
    #[serde(flatten)]
    pub kind: TxKind,
    /// Executes only if this transaction already executed in an earlier block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requires: Option<TxId>,
}

impl Transaction {
    pub fn new(id: TxId, submitter: PartyId, kind: TxKind) -> Self {
        Transaction {
            id,
            submitter,
            kind,
            requires: None,
        }
    }

    pub fn noop(id: TxId, submitter: PartyId) -> Self {
        Self::new(id, submitter, TxKind::Noop)
    }

    pub fn is_open(&self) -> bool {
        matches!(self.kind, TxKind::Open { .. })
    }

    /// Structural well-formedness: positive swap input, λ-bit openings.
    pub fn is_well_formed(&self, lambda_bits: usize) -> bool {
        match &self.kind {
            TxKind::Swap { amount_in, max_rate, .. } => {
                amount::is_positive(amount_in)
                    && max_rate.as_ref().is_none_or(amount::is_positive)
            }
            TxKind::PlainTransfer { from, to, amount, .. } => {
                from != to && *amount >= amount::zero()
            }
            TxKind::Open { sigma, j, .. } => sigma.len() * 8 == lambda_bits && *j >= 1,
            TxKind::Noop => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub parent: TxId,
    pub index: usize,
    pub transfers: Vec<Transfer>,
    pub carries_code: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Commitment(#[serde(with = "hex_array")] pub [u8; 32]);

impl Commitment {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartialSeed(#[serde(with = "hex_bytes")] Vec<u8>);

impl PartialSeed {
    pub fn new(bytes: Vec<u8>, lambda_bits: usize) -> Result<Self> {
        if lambda_bits == 0 || lambda_bits % 8 != 0 {
            return Err(Error::InvalidParam(format!(
                "λ must be a positive multiple of 8, got {lambda_bits}"
            )));
        }
        if bytes.len() * 8 != lambda_bits {
            return Err(Error::InvalidParam(format!(
                "seed has {} bits, expected {lambda_bits}",
                bytes.len() * 8
            )));
        }
        Ok(PartialSeed(bytes))
    }

    pub fn zero(lambda_bits: usize) -> Self {
        PartialSeed(vec![0; lambda_bits / 8])
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bits(&self) -> usize {
        self.0.len() * 8
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

/// A bijection on `0..L`; applying it yields `out[i] = items[mapping[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &v in &mapping {
            if v >= mapping.len() || seen[v] {
                return Err(Error::NotABijection(format!(
                    "value {v} repeated or out of range for length {}",
                    mapping.len()
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(len: usize) -> Self {
        Permutation {
            mapping: (0..len).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.len(), "permutation length mismatch");
        self.mapping.iter().map(|&m| items[m].clone()).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n_leaders: usize,
    pub tau1: u64,
    pub tau2: u64,
    pub d: u64,
    pub m: usize,
    #[serde(default = "default_lambda")]
    pub lambda_bits: usize,
    #[serde(with = "amount::serde_str")]
    pub alpha: Amount,
    #[serde(with = "amount::serde_str")]
    pub w: Amount,
    pub n_t: usize,
}

fn default_lambda() -> usize {
    256
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.to_string()));
        if self.n_leaders < 1 {
            return bad("n_leaders must be at least 1");
        }
        if self.tau1 < 1 || self.tau2 < 1 || self.d < 1 {
            return bad("tau1, tau2 and d must be at least 1");
        }
        if self.m < 1 {
            return bad("m must be at least 1");
        }
        if self.lambda_bits == 0 || self.lambda_bits % 8 != 0 {
            return bad("lambda_bits must be a positive multiple of 8");
        }
        if self.alpha <= amount::zero() || self.alpha >= amount::one() {
            return bad("alpha must lie in (0, 1)");
        }
        if self.w <= amount::zero() {
            return bad("w must be positive");
        }
        if self.n_t < 1 {
            return bad("n_t must be at least 1");
        }
        Ok(())
    }

    pub fn waiting_phase(&self) -> u64 {
        self.n_leaders as u64 + self.tau1 + self.tau2 + self.d
    }

    /// Number of chunk slots permuted per block.
    pub fn slots(&self) -> usize {
        self.n_t * self.m
    }

    /// Blocks up to this height are delivered with the identity permutation.
    pub fn bootstrap_height(&self) -> u64 {
        self.n_leaders as u64 + self.tau1 + self.tau2
    }
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            n_leaders: 3,
            tau1: 8,
            tau2: 3,
            d: 6,
            m: 1,
            lambda_bits: 256,
            alpha: amount::ratio(1, 2),
            w: amount::int(2),
            n_t: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u64);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub parent: Option<BlockId>,
    pub height: u64,
    pub miner: Option<PartyId>,
    pub txs: Vec<Transaction>,
    pub coms: Vec<Option<Commitment>>,
}

impl Block {
    pub fn genesis(n_leaders: usize) -> Self {
        let mut b = Block {
            id: BlockId(0),
            parent: None,
            height: 0,
            miner: None,
            txs: Vec::new(),
            coms: vec![None; n_leaders],
        };
        b.id = b.compute_id();
        b
    }

    pub fn new(
        parent: &Block,
        miner: PartyId,
        txs: Vec<Transaction>,
        coms: Vec<Option<Commitment>>,
    ) -> Self {
        let mut b = Block {
            id: BlockId(0),
            parent: Some(parent.id),
            height: parent.height + 1,
            miner: Some(miner),
            txs,
            coms,
        };
        b.id = b.compute_id();
        b
    }

    /// Content hash over parent, height, miner, transaction ids and commitments.
    pub fn compute_id(&self) -> BlockId {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.parent.map_or(u64::MAX, |p| p.0).to_be_bytes());
        h.update(self.height.to_be_bytes());
        h.update(self.miner.map_or(u64::MAX, |m| m.0 as u64).to_be_bytes());
        for tx in &self.txs {
            h.update(tx.id.to_be_bytes());
        }
        for c in &self.coms {
            match c {
                Some(c) => h.update(c.0),
                None => h.update([0xff]),
            }
        }
        let d = h.finalize();
        BlockId(u64::from_be_bytes(d[..8].try_into().expect("8 bytes")))
    }

    pub fn tx_ids(&self) -> impl Iterator<Item = TxId> + '_ {
        self.txs.iter().map(|t| t.id)
    }
}

/// False iff a transaction fails `vt`, a commitment slot is empty, or the
/// commitment count differs from `n_leaders`.
pub fn validate_block(bl: &Block, n_leaders: usize, vt: impl Fn(&Transaction) -> bool) -> bool {
    bl.coms.len() == n_leaders && bl.coms.iter().all(Option::is_some) && bl.txs.iter().all(vt)
}

/// Transaction validity predicate: structural checks plus an id blacklist.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TxValidity {
    pub lambda_bits: usize,
    pub blacklist: BTreeSet<TxId>,
}

impl TxValidity {
    pub fn new(lambda_bits: usize) -> Self {
        TxValidity {
            lambda_bits,
            blacklist: BTreeSet::new(),
        }
    }

    pub fn check(&self, tx: &Transaction) -> bool {
        !self.blacklist.contains(&tx.id) && tx.is_well_formed(self.lambda_bits)
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

mod hex_array {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("commitment must be 32 bytes"))
    }
}
