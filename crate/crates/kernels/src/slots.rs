use std::sync::{Arc, Mutex, MutexGuard};

/// Per-task output cells. Each task owns one slot, so the locks never
/// contend; they only make the hand-off to the master safe.
pub(crate) struct Slots<T>(Arc<Vec<Mutex<T>>>);

impl<T> Clone for Slots<T> {
    fn clone(&self) -> Self {
        Slots(self.0.clone())
    }
}

impl<T> Slots<T> {
    pub(crate) fn new(n: usize, mut init: impl FnMut(usize) -> T) -> Self {
        Slots(Arc::new((0..n).map(|i| Mutex::new(init(i))).collect()))
    }

    pub(crate) fn lock(&self, i: usize) -> MutexGuard<'_, T> {
        self.0[i].lock().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn len(&self) -> usize {
        self.0.len()
    }
}
