//! Per-worker FIFO queues with oldest-first stealing.

use rand::Rng;
use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub(crate) struct WorkerQueues<T> {
    queues: Vec<Mutex<VecDeque<T>>>,
    queued: AtomicUsize,
}

impl<T> WorkerQueues<T> {
    pub(crate) fn new(workers: usize) -> Self {
        WorkerQueues {
            queues: (0..workers).map(|_| Mutex::new(VecDeque::new())).collect(),
            queued: AtomicUsize::new(0),
        }
    }

    pub(crate) fn push(&self, worker: usize, item: T) {
        self.queues[worker].lock().unwrap().push_back(item);
        self.queued.fetch_add(1, Ordering::SeqCst);
    }

    /// Owner takes the oldest task from its own queue.
    pub(crate) fn pop_own(&self, worker: usize) -> Option<T> {
        let item = self.queues[worker].lock().unwrap().pop_front();
        if item.is_some() {
            self.queued.fetch_sub(1, Ordering::SeqCst);
        }
        item
    }

    /// Takes the oldest task of a non-empty victim, scanning from a random
    /// starting queue. One task per call.
    pub(crate) fn steal<R: Rng>(&self, thief: usize, rng: &mut R) -> Option<T> {
        let n = self.queues.len();
        if n < 2 || self.queued.load(Ordering::SeqCst) == 0 {
            return None;
        }
        let start = rng.random_range(0..n);
        for k in 0..n {
            let victim = (start + k) % n;
            if victim == thief {
                continue;
            }
            let item = self.queues[victim].lock().unwrap().pop_front();
            if item.is_some() {
                self.queued.fetch_sub(1, Ordering::SeqCst);
                return item;
            }
        }
        None
    }

    /// Tasks currently sitting in any queue.
    pub(crate) fn queued(&self) -> usize {
        self.queued.load(Ordering::SeqCst)
    }

    #[cfg(test)]
    pub(crate) fn len_of(&self, worker: usize) -> usize {
        self.queues[worker].lock().unwrap().len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;
    use std::collections::HashSet;
    use std::sync::Arc;

    #[test]
    fn owner_pops_oldest() {
        let q = WorkerQueues::new(2);
        q.push(0, 1);
        q.push(0, 2);
        assert_eq!(q.pop_own(0), Some(1));
        assert_eq!(q.pop_own(0), Some(2));
        assert_eq!(q.pop_own(0), None);
        assert_eq!(q.queued(), 0);
    }

    #[test]
    fn steal_from_empty_is_none() {
        let q: WorkerQueues<u32> = WorkerQueues::new(4);
        let mut rng = SmallRng::seed_from_u64(1);
        assert_eq!(q.steal(0, &mut rng), None);
    }

    #[test]
    fn steal_takes_exactly_one_oldest() {
        let q = WorkerQueues::new(3);
        q.push(1, 10);
        q.push(1, 11);
        let mut rng = SmallRng::seed_from_u64(7);
        assert_eq!(q.steal(0, &mut rng), Some(10));
        assert_eq!(q.len_of(1), 1);
        assert_eq!(q.pop_own(1), Some(11));
    }

    #[test]
    fn thief_never_steals_from_itself() {
        let q = WorkerQueues::new(2);
        q.push(0, 5);
        let mut rng = SmallRng::seed_from_u64(3);
        assert_eq!(q.steal(0, &mut rng), None);
        assert_eq!(q.steal(1, &mut rng), Some(5));
    }

    #[test]
    fn concurrent_steals_never_duplicate() {
        let q = Arc::new(WorkerQueues::new(4));
        for i in 0..20_000u32 {
            q.push((i % 4) as usize, i);
        }
        let handles: Vec<_> = (0..4)
            .map(|w| {
                let q = q.clone();
                std::thread::spawn(move || {
                    let mut rng = SmallRng::seed_from_u64(w as u64);
                    let mut got = Vec::new();
                    while let Some(x) = q.pop_own(w).or_else(|| q.steal(w, &mut rng)) {
                        got.push(x);
                    }
                    got
                })
            })
            .collect();
        let all: Vec<u32> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        assert_eq!(all.len(), 20_000);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 20_000);
    }
}
