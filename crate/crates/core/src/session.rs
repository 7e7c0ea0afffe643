use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::types::ChatResponse;

pub const DEFAULT_SESSION_TURNS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub query: String,
    pub response: ChatResponse,
}

/// Rolling buffer of the most recent turns of one conversation.
#[derive(Debug, Clone)]
pub struct SessionBuffer {
    capacity: usize,
    turns: VecDeque<Turn>,
}

impl SessionBuffer {
    pub fn new(capacity: usize) -> Self {
        SessionBuffer {
            capacity: capacity.max(1),
            turns: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, turn: Turn) {
        if self.turns.len() == self.capacity {
            self.turns.pop_front();
        }
        self.turns.push_back(turn);
    }

    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter()
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

impl Default for SessionBuffer {
    fn default() -> Self {
        SessionBuffer::new(DEFAULT_SESSION_TURNS)
    }
}
