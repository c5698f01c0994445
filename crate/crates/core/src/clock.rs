//! Wall clock for runtime columns. `std::time::Instant` panics on
//! `wasm32-unknown-unknown`, where elapsed times read as zero instead.

use std::time::Duration;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Instant {
    #[cfg(not(target_arch = "wasm32"))]
    inner: std::time::Instant,
}

impl Instant {
    pub(crate) fn now() -> Self {
        Instant {
            #[cfg(not(target_arch = "wasm32"))]
            inner: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.inner.elapsed();
        #[cfg(target_arch = "wasm32")]
        return Duration::ZERO;
    }
}
