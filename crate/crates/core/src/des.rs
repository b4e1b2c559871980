//! Event calendar and dispatch loop.
//!
//! Events are ordered by `(time, seq)`, where `seq` is the insertion
//! counter, so simultaneous events are dispatched in the order they were
//! scheduled. Zero-delay events are ordinary events.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// A scheduled event carrying a model-specific `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<K> {
    pub time: f64,
    pub seq: u64,
    pub kind: K,
}

struct Entry<K>(Event<K>);

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Future-event list plus the simulation clock.
pub struct Calendar<K> {
    heap: BinaryHeap<Entry<K>>,
    next_seq: u64,
    clock: f64,
}

impl<K> Default for Calendar<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Calendar<K> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            clock: 0.0,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at absolute time `time` and returns its sequence number.
    pub fn schedule(&mut self, time: f64, kind: K) -> Result<u64> {
        if !(time >= self.clock) {
            return Err(Error::Causality {
                time,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, kind }));
        Ok(seq)
    }

    /// Schedules `kind` after a non-negative `delay` from the current clock.
    pub fn schedule_in(&mut self, delay: f64, kind: K) -> Result<u64> {
        self.schedule(self.clock + delay, kind)
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop_next(&mut self) -> Option<Event<K>> {
        let Entry(ev) = self.heap.pop()?;
        self.clock = ev.time;
        Some(ev)
    }
}

/// Reacts to dispatched events, possibly scheduling new ones.
pub trait Handler<K> {
    fn handle(&mut self, event: Event<K>, calendar: &mut Calendar<K>) -> Result<()>;
}

impl<K, F> Handler<K> for F
where
    F: FnMut(Event<K>, &mut Calendar<K>) -> Result<()>,
{
    fn handle(&mut self, event: Event<K>, calendar: &mut Calendar<K>) -> Result<()> {
        self(event, calendar)
    }
}

/// Dispatches events until the calendar is empty or the next event lies
/// beyond `horizon`. Returns the clock after the last dispatched event.
///
/// `max_events` bounds the number of dispatched events; exceeding it is an
/// error.
pub fn run<K, H>(
    calendar: &mut Calendar<K>,
    handler: &mut H,
    horizon: f64,
    max_events: Option<u64>,
) -> Result<f64>
where
    H: Handler<K> + ?Sized,
{
    let mut dispatched = 0u64;
    while let Some(t) = calendar.peek_time() {
        if t > horizon {
            break;
        }
        if let Some(cap) = max_events {
            if dispatched >= cap {
                return Err(Error::EventCap(cap));
            }
        }
        let ev = calendar.pop_next().expect("peeked");
        handler.handle(ev, calendar)?;
        dispatched += 1;
    }
    Ok(calendar.clock())
}
