/// Sink for multiplication counts. `()` discards them, so uninstrumented
/// callers pay nothing.
pub trait MulCount {
    fn add(&mut self, n: u64);
}

impl MulCount for () {
    #[inline(always)]
    fn add(&mut self, _n: u64) {}
}

/// Counts every multiplication (and division) reported to it.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MulCounter {
    pub count: u64,
}

impl MulCount for MulCounter {
    #[inline]
    fn add(&mut self, n: u64) {
        self.count += n;
    }
}
