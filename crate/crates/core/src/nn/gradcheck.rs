use rand::seq::index;

use super::network::Network;
use super::objective::Objective;

/// Minimum number of parameters probed (all of them when the network is smaller).
pub const MIN_PROBES: usize = 50;

/// Largest relative discrepancy between the reverse-mode gradient and central
/// finite differences, over a seeded random subset of parameters. The
/// denominator is `max(|g|, |g_fd|, 1e-8)`.
///
/// Each parameter is probed with steps `epsilon` and `epsilon / 100` and the
/// smaller discrepancy counts: a wide step can straddle a ReLU or L1 kink and
/// a narrow one can drown a tiny gradient in rounding, while a wrong gradient
/// disagrees at both.
pub fn gradient_check<O: Objective>(
    net: &Network,
    objective: &O,
    input: &[f64],
    target: &[f64],
    epsilon: f64,
    seed: u64,
) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let n = net.param_count();
    let mut analytic = vec![0.0; n];
    objective.loss_grad(net, input, target, &mut analytic);

    let probes: Vec<usize> = if n <= MIN_PROBES {
        (0..n).collect()
    } else {
        let mut rng = crate::seed::rng(seed);
        let mut v = index::sample(&mut rng, n, MIN_PROBES).into_vec();
        v.sort_unstable();
        v
    };

    let mut probe = net.clone();
    probes
        .into_iter()
        .map(|i| {
            let g = analytic[i];
            [epsilon, epsilon * 1e-2]
                .into_iter()
                .map(|h| {
                    let fd = central_difference(&mut probe, objective, input, target, i, h);
                    (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn central_difference<O: Objective>(
    net: &mut Network,
    objective: &O,
    input: &[f64],
    target: &[f64],
    i: usize,
    h: f64,
) -> f64 {
    let original = net.params()[i];
    net.params_mut()[i] = original + h;
    let up = objective.loss(net, input, target);
    net.params_mut()[i] = original - h;
    let down = objective.loss(net, input, target);
    net.params_mut()[i] = original;
    (up - down) / (2.0 * h)
}
