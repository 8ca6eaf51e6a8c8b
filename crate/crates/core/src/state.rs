//! Agent cognitive state: public dialogue history followed by private memory.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Agent,
    System,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub tokens: Vec<TokenId>,
}

impl Turn {
    pub fn new(role: Role, tokens: Vec<TokenId>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::domain("turn must contain at least one token"));
        }
        Ok(Turn { role, tokens })
    }
}

/// `K = K_pub ‖ K_priv`. Operations return new states; nothing is shared
/// mutably between the two parties of a trial.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub public_history: Vec<Turn>,
    #[serde(default)]
    pub private_memory: Vec<Turn>,
}

impl AgentState {
    pub fn new(public_history: Vec<Turn>) -> Self {
        AgentState {
            public_history,
            private_memory: Vec::new(),
        }
    }

    /// The model prefix `z = flatten(public ‖ private)`.
    pub fn prefix(&self) -> Vec<TokenId> {
        self.public_history
            .iter()
            .chain(&self.private_memory)
            .flat_map(|t| t.tokens.iter().copied())
            .collect()
    }

    /// Drops the `delta` oldest public turns.
    pub fn truncate_history(&self, delta: usize) -> Result<Self> {
        if delta > self.public_history.len() {
            return Err(Error::domain(format!(
                "cannot truncate {delta} turns from a history of {}",
                self.public_history.len()
            )));
        }
        Ok(AgentState {
            public_history: self.public_history[delta..].to_vec(),
            private_memory: self.private_memory.clone(),
        })
    }

    pub fn append_private_summary(&self, summary: Turn) -> Result<Self> {
        if summary.tokens.is_empty() {
            return Err(Error::domain("summary must be non-empty"));
        }
        let mut next = self.clone();
        next.private_memory.push(summary);
        Ok(next)
    }

    /// Appends the `n_chunks` pool chunks with the largest token overlap with
    /// `query` (ties by ascending chunk id), best first.
    pub fn inject_retrieval(
        &self,
        pool: &MemoryPool,
        query: &[TokenId],
        n_chunks: usize,
    ) -> Result<Self> {
        let chosen = pool.retrieve(query, n_chunks)?;
        let mut next = self.clone();
        next.private_memory.extend(chosen.into_iter().map(|c| Turn {
            role: Role::System,
            tokens: c.tokens.clone(),
        }));
        Ok(next)
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("agent state: {e}")))
    }

    /// Random shared history: `turns` alternating user/agent turns of
    /// `turn_len` uniform tokens.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        vocab_size: usize,
        turns: usize,
        turn_len: usize,
    ) -> Self {
        let history = (0..turns)
            .map(|i| Turn {
                role: if i % 2 == 0 { Role::User } else { Role::Agent },
                tokens: random_tokens(rng, vocab_size, turn_len),
            })
            .collect();
        AgentState::new(history)
    }
}

pub(crate) fn random_tokens<R: Rng + ?Sized>(
    rng: &mut R,
    vocab_size: usize,
    len: usize,
) -> Vec<TokenId> {
    (0..len)
        .map(|_| TokenId(rng.random_range(0..vocab_size as u32)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: u64,
    pub tokens: Vec<TokenId>,
}

/// Private retrieval corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryPool {
    chunks: Vec<Chunk>,
}

impl MemoryPool {
    pub fn new(chunks: Vec<Chunk>) -> Result<Self> {
        let mut ids: Vec<u64> = chunks.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Ingestion("duplicate chunk id".into()));
        }
        Ok(MemoryPool { chunks })
    }

    pub fn synthetic<R: Rng + ?Sized>(
        rng: &mut R,
        vocab_size: usize,
        n_chunks: usize,
        chunk_len: usize,
    ) -> Self {
        let chunks = (0..n_chunks as u64)
            .map(|id| Chunk {
                id,
                tokens: random_tokens(rng, vocab_size, chunk_len),
            })
            .collect();
        MemoryPool { chunks }
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn total_tokens(&self) -> usize {
        self.chunks.iter().map(|c| c.tokens.len()).sum()
    }

    /// Number of distinct tokens shared between a chunk and the query.
    pub fn overlap(chunk: &Chunk, query: &[TokenId]) -> usize {
        let mut q: Vec<TokenId> = query.to_vec();
        q.sort_unstable();
        q.dedup();
        let mut c: Vec<TokenId> = chunk.tokens.clone();
        c.sort_unstable();
        c.dedup();
        c.iter().filter(|t| q.binary_search(t).is_ok()).count()
    }

    pub fn retrieve(&self, query: &[TokenId], n_chunks: usize) -> Result<Vec<&Chunk>> {
        if self.chunks.is_empty() {
            return Err(Error::domain("memory pool is empty"));
        }
        if n_chunks == 0 || n_chunks > self.chunks.len() {
            return Err(Error::domain(format!(
                "cannot retrieve {n_chunks} of {} chunks",
                self.chunks.len()
            )));
        }
        let mut scored: Vec<(usize, &Chunk)> = self
            .chunks
            .iter()
            .map(|c| (Self::overlap(c, query), c))
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
        Ok(scored.into_iter().take(n_chunks).map(|(_, c)| c).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let pool: MemoryPool = serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("memory pool: {e}")))?;
        Self::new(pool.chunks)
    }
}
