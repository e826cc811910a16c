//! The square-root cusp `f(x) = (2/3)|x|^(3/2)`.

/// Half-width of the limiting period-2 orbit, `delta^2 / 4`.
pub fn example1_orbit_amplitude(delta: f64) -> f64 {
    delta * delta / 4.0
}

/// First `m` elements of the set of starting points that reach the origin
/// exactly.
///
/// Elements are generated level by level: the origin, then the preimages of
/// every element of the previous level, ordered by magnitude with the
/// positive point first. Preimages come from the quadratic in `t = sqrt(|x|)`
/// on each branch of the map.
pub fn example1_basin_set(delta: f64, m: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut frontier = vec![0.0];
    while out.len() < m && !frontier.is_empty() {
        let mut next: Vec<f64> = Vec::new();
        for &s in &frontier {
            for x in preimages(delta, s) {
                let seen = out.iter().chain(&next).any(|&y| same(x, y));
                if !seen {
                    next.push(x);
                }
            }
        }
        next.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then_with(|| b.total_cmp(a)));
        out.extend_from_slice(&next);
        frontier = next;
    }
    out.truncate(m);
    out
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))
}

/// Nonnegative solutions of `x - delta * sqrt(x) = s`.
fn positive_preimages(delta: f64, s: f64) -> Vec<f64> {
    // t^2 - delta t - s = 0 with t = sqrt(x) >= 0
    let disc = delta * delta + 4.0 * s;
    if disc < 0.0 {
        return Vec::new();
    }
    let root = disc.sqrt();
    let mut xs = Vec::with_capacity(2);
    for t in [(delta + root) / 2.0, (delta - root) / 2.0] {
        if t >= 0.0 {
            xs.push(t * t);
        }
    }
    xs
}

fn preimages(delta: f64, s: f64) -> Vec<f64> {
    // The negative branch is the mirror image of the positive one.
    let mut xs = positive_preimages(delta, s);
    xs.extend(
        positive_preimages(delta, -s)
            .into_iter()
            .filter(|&y| y > 0.0)
            .map(|y| -y),
    );
    xs
}
