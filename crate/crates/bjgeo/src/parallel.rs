//! Order-preserving parallel map. Work items are pure functions of their
//! index, so the output vector is byte-identical for any worker count; only
//! wall time changes.

/// Evaluates `f(0..count)` on up to `workers` scoped threads and returns the
/// results in index order. `workers == 1` (or `0`) runs inline.
pub fn map_indexed<T, F>(workers: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if count == 0 {
        return Vec::new();
    }
    let workers = workers.max(1).min(count);
    if workers == 1 {
        return (0..count).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(workers);
    let fref = &f;
    std::thread::scope(|scope| {
        let mut rest: &mut [Option<T>] = &mut slots;
        let mut start = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let base = start;
            scope.spawn(move || {
                for (off, slot) in head.iter_mut().enumerate() {
                    *slot = Some(fref(base + off));
                }
            });
            rest = tail;
            start += take;
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every index was assigned to a chunk"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_matches_serial() {
        let serial = map_indexed(1, 37, |i| i * i);
        for w in [2, 3, 8, 64] {
            assert_eq!(map_indexed(w, 37, |i| i * i), serial);
        }
    }

    #[test]
    fn empty_and_oversubscribed() {
        assert!(map_indexed(4, 0, |i| i).is_empty());
        assert_eq!(map_indexed(16, 3, |i| i + 1), vec![1, 2, 3]);
    }
}
