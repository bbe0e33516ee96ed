#![no_main]

use libfuzzer_sys::fuzz_target;
use subradiance::fitting::Histogram;

fuzz_target!(|data: &[u8]| {
    let Ok(h) = Histogram::from_csv_reader(data) else {
        return;
    };
    assert_eq!(h.delays.len(), h.counts.len());
    assert!(!h.delays.is_empty());
    assert!(h.delays.windows(2).all(|w| w[0] < w[1]));
    assert!(h.delays.iter().all(|d| d.is_finite()));
    assert!(h.counts.iter().all(|c| c.is_finite() && *c >= 0.0));
});
