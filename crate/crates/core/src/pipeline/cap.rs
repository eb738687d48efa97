use std::collections::{BTreeMap, VecDeque};

use crate::logic::Label;

/// Proof size whose count caps the shallower buckets.
pub const CAP_REFERENCE: usize = 5;

/// Number of used premises, or `None` for neutral problems.
pub fn bucket_of(label: Label, used: Option<&[usize]>) -> Option<usize> {
    match label {
        Label::Neutral => None,
        _ => Some(used.map_or(0, <[usize]>::len)),
    }
}

/// Streaming proof-size cap.
///
/// Non-neutral items with fewer than [`CAP_REFERENCE`] used premises are
/// released only while their bucket's released count stays at or below the
/// reference bucket's count; the rest wait in a FIFO buffer and are released
/// as the reference bucket grows. Whatever is still buffered at the end of the
/// stream is the surplus the cap discards.
#[derive(Debug)]
pub struct ComplexityCap<T> {
    reference: usize,
    released: BTreeMap<usize, usize>,
    buffers: BTreeMap<usize, VecDeque<T>>,
}

impl<T> Default for ComplexityCap<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> ComplexityCap<T> {
    pub fn new() -> Self {
        ComplexityCap {
            reference: 0,
            released: BTreeMap::new(),
            buffers: BTreeMap::new(),
        }
    }

    /// Feeds one item; returns the items released by it, in stream order
    /// for each bucket.
    pub fn push(&mut self, bucket: Option<usize>, item: T) -> Vec<T> {
        let b = match bucket {
            Some(b) if b < CAP_REFERENCE => b,
            Some(b) => {
                *self.released.entry(b).or_default() += 1;
                let mut out = vec![item];
                if b == CAP_REFERENCE {
                    self.reference += 1;
                    out.extend(self.drain_ready());
                }
                return out;
            }
            None => return vec![item],
        };
        let count = self.released.entry(b).or_default();
        if *count < self.reference {
            *count += 1;
            vec![item]
        } else {
            self.buffers.entry(b).or_default().push_back(item);
            Vec::new()
        }
    }

    fn drain_ready(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        for (b, buf) in &mut self.buffers {
            let count = self.released.entry(*b).or_default();
            while *count < self.reference {
                match buf.pop_front() {
                    Some(item) => {
                        out.push(item);
                        *count += 1;
                    }
                    None => break,
                }
            }
        }
        out
    }

    pub fn buffered(&self) -> usize {
        self.buffers.values().map(VecDeque::len).sum()
    }

    pub fn released(&self, bucket: usize) -> usize {
        self.released.get(&bucket).copied().unwrap_or(0)
    }

    /// Ends the stream, returning the discarded surplus.
    pub fn finish(self) -> Vec<T> {
        self.buffers.into_values().flatten().collect()
    }
}
