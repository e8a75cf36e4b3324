//! Monotonic stopwatch with a wasm-safe fallback.

#[cfg(not(target_arch = "wasm32"))]
#[derive(Clone, Copy)]
pub struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    pub fn elapsed_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

// `Instant::now` aborts on wasm32-unknown-unknown; traces there carry zeros.
#[cfg(target_arch = "wasm32")]
#[derive(Clone, Copy)]
pub struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch
    }

    pub fn elapsed_s(&self) -> f64 {
        0.0
    }
}
