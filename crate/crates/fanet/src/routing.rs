//! The three routing protocols (DBR, SMURF, BA-SMURF): weighted graphs
//! from a swarm belief, Monte Carlo expected link capacities, and
//! maximum-bottleneck routes.
//!
//! All three protocols pick a single source-to-destination path and differ
//! only in the edge metric used for selection:
//!
//! - **DBR** uses the deterministic capacity of each link at the estimated
//!   distance, ignoring uncertainty;
//! - **SMURF** maximizes the product of link existence probabilities;
//! - **BA-SMURF** maximizes the minimum expected capacity, where the
//!   expectation runs over whole-swarm position draws and includes the
//!   beamforming misalignment loss.
//!
//! Every returned [`RouteResult`] is evaluated with the full beam-aware
//! capacity model so the protocols can be compared on equal footing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::beamforming::{block_response, BeamPattern, BeamformingError, UpaConfig};
use crate::channel::{path_loss, sinr_capacity, ChannelParams};
use crate::geometry::{reciprocal_angles, relative_angles, Angles, Vec3};
use crate::uncertainty::{SwarmBelief, SwarmSampler, UncertaintyError};

/// Distances are clamped to this floor before the path-loss evaluation so
/// a sampled near-collision cannot produce unbounded received power.
const MIN_LINK_DISTANCE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("node {id} out of range for a {count}-UAV network")]
    InvalidNode { id: usize, count: usize },
    #[error("source and destination must differ, got {0} twice")]
    SameEndpoints(usize),
    #[error("no route between {from} and {to}")]
    Disconnected { from: usize, to: usize },
    #[error("no link weight available for hop {tx} -> {rx}")]
    MissingLinkWeight { tx: usize, rx: usize },
    #[error("at least one Monte Carlo sample required")]
    InsufficientSamples,
    #[error("cross-traffic fractions must lie in [0, 1]")]
    InvalidCrossTraffic,
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Beamforming(#[from] BeamformingError),
}

/// Everything the controller knows when it computes a route.
#[derive(Debug, Clone)]
pub struct NetworkBelief {
    pub swarm: SwarmBelief,
    pub channel: ChannelParams,
    pub upa: UpaConfig,
    pub beam: BeamPattern,
    /// Fraction of time each UAV is busy with cross-traffic.
    pub cross_traffic: Vec<f64>,
    /// Routes already active in the network; their transmitters interfere
    /// with new links and share relays under TDMA.
    pub active_routes: Vec<RouteResult>,
}

impl NetworkBelief {
    /// Belief with no cross-traffic and no active routes.
    pub fn new(
        swarm: SwarmBelief,
        channel: ChannelParams,
        upa: UpaConfig,
        beam: BeamPattern,
    ) -> Self {
        let k = swarm.len();
        NetworkBelief {
            swarm,
            channel,
            upa,
            beam,
            cross_traffic: vec![0.0; k],
            active_routes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.swarm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.swarm.is_empty()
    }

    pub fn validate(&self) -> Result<(), RoutingError> {
        self.swarm.validate()?;
        if self.cross_traffic.len() != self.len()
            || self.cross_traffic.iter().any(|&r| !(0.0..=1.0).contains(&r))
        {
            return Err(RoutingError::InvalidCrossTraffic);
        }
        for route in &self.active_routes {
            for &id in &route.path {
                self.check_node(id)?;
            }
        }
        Ok(())
    }

    fn check_node(&self, id: usize) -> Result<(), RoutingError> {
        if id >= self.len() {
            return Err(RoutingError::InvalidNode { id, count: self.len() });
        }
        Ok(())
    }

    fn rho(&self, id: usize) -> f64 {
        self.cross_traffic.get(id).copied().unwrap_or(0.0)
    }
}

/// Monte Carlo statistics for one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkWeight {
    pub tx: usize,
    pub rx: usize,
    /// Mean beam-aware capacity over the belief distribution, bit/s.
    pub expected_capacity: f64,
    /// Fraction of draws with the endpoints within communication range.
    pub existence_probability: f64,
    /// Standard error of the capacity mean, bit/s.
    pub mc_std_error: f64,
}

/// Beam aim directions assigned to one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopBeam {
    pub tx: usize,
    pub rx: usize,
    /// Transmit beam aim in the transmitter's frame.
    pub tx_aim: Angles,
    /// Receive beam aim (the reciprocal direction).
    pub rx_aim: Angles,
}

/// A computed route with its expected per-hop statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    /// Node ids from source to destination; simple (no repeats).
    pub path: Vec<usize>,
    /// Minimum over hops of the cross-traffic-discounted half-duplex
    /// expected capacity, bit/s.
    pub bottleneck_capacity: f64,
    /// Per-hop statistics in travel direction.
    pub link_weights: Vec<LinkWeight>,
    /// Per-hop beam assignments.
    pub beams: Vec<HopBeam>,
}

impl RouteResult {
    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo link statistics
// ---------------------------------------------------------------------------

/// Precomputed link statistics for every ordered pair of one belief, sharing
/// one set of whole-swarm draws (common random numbers across edges).
#[derive(Debug, Clone)]
pub struct LinkTable {
    k: usize,
    weights: Vec<LinkWeight>,
    aims: Vec<Option<Angles>>,
}

impl LinkTable {
    #[inline]
    fn index(&self, tx: usize, rx: usize) -> usize {
        tx * self.k + rx
    }

    pub fn weight(&self, tx: usize, rx: usize) -> &LinkWeight {
        &self.weights[self.index(tx, rx)]
    }

    /// Transmit-side aim angles for a directed link, when defined.
    pub fn aim(&self, tx: usize, rx: usize) -> Option<Angles> {
        self.aims[self.index(tx, rx)]
    }
}

/// Interference source: a transmitter position with its beam aim.
struct ActiveTransmitter {
    node: usize,
    aim: Angles,
}

fn active_transmitters(belief: &NetworkBelief) -> Vec<ActiveTransmitter> {
    let mut out = Vec::new();
    for route in &belief.active_routes {
        for hop in &route.beams {
            out.push(ActiveTransmitter { node: hop.tx, aim: hop.tx_aim });
        }
    }
    out
}

/// Draws the shared swarm samples for one routing call. A deterministic
/// belief (all covariances zero) collapses to a single draw.
fn draw_samples(
    belief: &NetworkBelief,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec3>>, RoutingError> {
    if n_samples == 0 {
        return Err(RoutingError::InsufficientSamples);
    }
    let sampler = SwarmSampler::new(&belief.swarm)?;
    let n_eff = if belief.swarm.is_deterministic() { 1 } else { n_samples };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..n_eff).map(|_| sampler.draw(&mut rng)).collect())
}

/// Estimated aim angles for every ordered pair, from the belief means and
/// attitude estimates. `None` when the two estimated positions coincide.
fn aim_table(belief: &NetworkBelief) -> Vec<Option<Angles>> {
    let k = belief.len();
    let mut aims = vec![None; k * k];
    for tx in 0..k {
        for rx in 0..k {
            if tx == rx {
                continue;
            }
            let etx = &belief.swarm.estimates[tx];
            let erx = &belief.swarm.estimates[rx];
            aims[tx * k + rx] = relative_angles(etx.mean, etx.attitude, erx.mean).ok();
        }
    }
    aims
}

/// Realized peak-normalized gain of a directed link for one sampled swarm
/// state: both ends were steered from estimated angles, the wave arrives
/// from the sampled true direction. The controller evaluates the realized
/// direction with its attitude estimates, which is all it knows.
fn sampled_gain(
    belief: &NetworkBelief,
    positions: &[Vec3],
    tx: usize,
    rx: usize,
    tx_aim: Angles,
    rx_aim: Angles,
    rows: usize,
    cols: usize,
) -> f64 {
    let att = belief.swarm.estimates[tx].attitude;
    let realized = match relative_angles(positions[tx], att, positions[rx]) {
        Ok(a) => a,
        Err(_) => return 0.0,
    };
    let h_tx = block_response(realized, tx_aim, rows, cols, &belief.upa);
    let h_rx = block_response(reciprocal_angles(realized), rx_aim, rows, cols, &belief.upa);
    h_tx * h_rx / (belief.upa.elements() as f64).powi(2)
}

/// Monte Carlo estimate of the expected beam-aware capacity and existence
/// probability for the ordered pairs in `pairs`, all sharing the draws.
fn compute_links(
    belief: &NetworkBelief,
    pairs: &[(usize, usize)],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<LinkWeight>, RoutingError> {
    let samples = draw_samples(belief, n_samples, seed)?;
    let aims = aim_table(belief);
    let k = belief.len();
    let interferers = active_transmitters(belief);
    let (rows, cols) = mask_block(&belief.beam);
    let noise = belief.channel.noise_power();
    let m2 = (belief.upa.elements() as f64).powi(2);

    let mut out = Vec::with_capacity(pairs.len());
    for &(tx, rx) in pairs {
        if tx == rx {
            return Err(UncertaintyError::SameNode(tx).into());
        }
        belief.check_node(tx)?;
        belief.check_node(rx)?;
        let tx_aim = aims[tx * k + rx];
        let rx_aim = tx_aim.map(reciprocal_angles);
        let (mut sum, mut sum_sq, mut hits) = (0.0f64, 0.0f64, 0usize);
        for positions in &samples {
            let d = (positions[tx] - positions[rx]).norm();
            let mut capacity = 0.0;
            if d <= belief.channel.max_range_m {
                hits += 1;
                if let (Some(tx_aim), Some(rx_aim)) = (tx_aim, rx_aim) {
                    let gain =
                        sampled_gain(belief, positions, tx, rx, tx_aim, rx_aim, rows, cols);
                    let d_eff = d.max(MIN_LINK_DISTANCE);
                    let attenuation = path_loss(d_eff, &belief.channel)
                        .expect("distance clamped positive");
                    let signal = belief.channel.tx_power_w * gain * gain * attenuation;
                    let mut interference = 0.0;
                    for it in &interferers {
                        if it.node == tx || it.node == rx {
                            continue;
                        }
                        if let Ok(from) = relative_angles(
                            positions[it.node],
                            belief.swarm.estimates[it.node].attitude,
                            positions[rx],
                        ) {
                            let h_t = block_response(from, it.aim, rows, cols, &belief.upa);
                            let h_r = block_response(
                                reciprocal_angles(from),
                                rx_aim,
                                rows,
                                cols,
                                &belief.upa,
                            );
                            let g_int = h_t * h_r / m2;
                            let d_int = (positions[it.node] - positions[rx])
                                .norm()
                                .max(MIN_LINK_DISTANCE);
                            interference += belief.channel.tx_power_w
                                * g_int
                                * g_int
                                * path_loss(d_int, &belief.channel)
                                    .expect("distance clamped positive");
                        }
                    }
                    let sinr_den = interference + noise;
                    capacity = belief.channel.bandwidth_hz
                        * (1.0 + signal / sinr_den).log2();
                }
            }
            sum += capacity;
            sum_sq += capacity * capacity;
        }
        let n = samples.len() as f64;
        let mean = sum / n;
        let variance = (sum_sq / n - mean * mean).max(0.0);
        out.push(LinkWeight {
            tx,
            rx,
            expected_capacity: mean,
            existence_probability: hits as f64 / n,
            mc_std_error: (variance / n).sqrt(),
        });
    }
    Ok(out)
}

/// Active block dimensions of the beam mask. Masks built by
/// [`crate::beamforming::make_beam`] always have this shape.
fn mask_block(beam: &BeamPattern) -> (usize, usize) {
    let mut rows = 0;
    let mut cols = 0;
    for (l, &on) in beam.stacked().iter().enumerate() {
        if on {
            let (i, j) = (l % beam.rows(), l / beam.rows());
            rows = rows.max(i + 1);
            cols = cols.max(j + 1);
        }
    }
    (rows.max(1), cols.max(1))
}

/// Expected capacity, existence probability, and Monte Carlo standard error
/// for one directed link, drawing the whole swarm per sample.
pub fn expected_link_capacity(
    belief: &NetworkBelief,
    tx: usize,
    rx: usize,
    n_samples: usize,
    seed: u64,
) -> Result<LinkWeight, RoutingError> {
    Ok(compute_links(belief, &[(tx, rx)], n_samples, seed)?.pop().expect("one pair requested"))
}

/// Link statistics for every ordered pair under common random numbers.
pub fn link_table(
    belief: &NetworkBelief,
    n_samples: usize,
    seed: u64,
) -> Result<LinkTable, RoutingError> {
    let k = belief.len();
    let mut pairs = Vec::with_capacity(k * (k - 1));
    for tx in 0..k {
        for rx in 0..k {
            if tx != rx {
                pairs.push((tx, rx));
            }
        }
    }
    let computed = compute_links(belief, &pairs, n_samples, seed)?;
    let mut weights = vec![
        LinkWeight {
            tx: 0,
            rx: 0,
            expected_capacity: 0.0,
            existence_probability: 0.0,
            mc_std_error: 0.0,
        };
        k * k
    ];
    for w in computed {
        weights[w.tx * k + w.rx] = w;
    }
    Ok(LinkTable { k, weights, aims: aim_table(belief) })
}

// ---------------------------------------------------------------------------
// Widest path
// ---------------------------------------------------------------------------

/// Undirected weighted graph over nodes `0..n`.
#[derive(Debug, Clone, Default)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph { n, edges: Vec::new() }
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) {
        assert!(a < self.n && b < self.n && a != b, "edge endpoints must be distinct nodes");
        assert!(weight.is_finite(), "edge weights must be finite");
        self.edges.push((a, b, weight));
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn adjacency(&self, min_weight: f64) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, w) in &self.edges {
            if w >= min_weight {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Maximum-bottleneck path from `source` to `dest`: the path maximizing the
/// minimum edge weight, computed via the maximum spanning tree. Among
/// bottleneck-optimal paths the result has the fewest hops and then the
/// lexicographically smallest id sequence.
pub fn widest_path(
    graph: &WeightedGraph,
    source: usize,
    dest: usize,
) -> Result<(Vec<usize>, f64), RoutingError> {
    let n = graph.node_count();
    if source >= n {
        return Err(RoutingError::InvalidNode { id: source, count: n });
    }
    if dest >= n {
        return Err(RoutingError::InvalidNode { id: dest, count: n });
    }
    if source == dest {
        return Err(RoutingError::SameEndpoints(source));
    }

    // Kruskal over descending weights; the source-dest path appears in the
    // maximum spanning forest once the two meet.
    let mut order: Vec<usize> = (0..graph.edges.len()).collect();
    order.sort_unstable_by(|&x, &y| {
        let (ax, bx, wx) = graph.edges[x];
        let (ay, by, wy) = graph.edges[y];
        wy.partial_cmp(&wx)
            .expect("finite weights")
            .then_with(|| (ax, bx).cmp(&(ay, by)))
    });
    let mut uf = UnionFind::new(n);
    let mut tree = vec![Vec::new(); n];
    for &e in &order {
        let (a, b, w) = graph.edges[e];
        if uf.union(a, b) {
            tree[a].push((b, w));
            tree[b].push((a, w));
            if uf.find(source) == uf.find(dest) {
                break;
            }
        }
    }
    if uf.find(source) != uf.find(dest) {
        return Err(RoutingError::Disconnected { from: source, to: dest });
    }

    // Walk the tree path to read off the optimal bottleneck.
    let bottleneck = tree_path_bottleneck(&tree, source, dest);

    // Tie-breaking: restrict to edges at or above the bottleneck, then take
    // the hop-shortest, lexicographically smallest path.
    let adj = graph.adjacency(bottleneck);
    let dist_to_dest = bfs_distances(&adj, dest);
    let mut path = vec![source];
    let mut current = source;
    while current != dest {
        let d = dist_to_dest[current].expect("connected in threshold subgraph");
        let next = adj[current]
            .iter()
            .copied()
            .find(|&nb| dist_to_dest[nb] == Some(d - 1))
            .expect("some neighbor advances towards dest");
        path.push(next);
        current = next;
    }
    Ok((path, bottleneck))
}

fn tree_path_bottleneck(tree: &[Vec<(usize, f64)>], source: usize, dest: usize) -> f64 {
    // Iterative DFS carrying the running minimum weight.
    let mut stack = vec![(source, usize::MAX, f64::INFINITY)];
    while let Some((node, parent, min_w)) = stack.pop() {
        if node == dest {
            return min_w;
        }
        for &(nb, w) in &tree[node] {
            if nb != parent {
                stack.push((nb, node, min_w.min(w)));
            }
        }
    }
    unreachable!("caller checked connectivity");
}

fn bfs_distances(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[start] = Some(0usize);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("enqueued nodes have distances");
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Route capacity and protocols
// ---------------------------------------------------------------------------

/// Available route capacity: minimum over hops of
/// `(1 - rho_tx) * capacity / 2`, the cross-traffic discount and the
/// half-duplex factor applied per transmitter.
pub fn route_capacity(
    path: &[usize],
    weights: &[LinkWeight],
    cross_traffic: &[f64],
) -> Result<f64, RoutingError> {
    let mut bottleneck = f64::INFINITY;
    for hop in path.windows(2) {
        let (tx, rx) = (hop[0], hop[1]);
        let w = weights
            .iter()
            .find(|w| w.tx == tx && w.rx == rx)
            .ok_or(RoutingError::MissingLinkWeight { tx, rx })?;
        let rho = cross_traffic.get(tx).copied().unwrap_or(0.0);
        bottleneck = bottleneck.min((1.0 - rho) * w.expected_capacity / 2.0);
    }
    if path.len() < 2 {
        return Ok(0.0);
    }
    Ok(bottleneck)
}

/// The protocols compared by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Dbr,
    Smurf,
    BaSmurf,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Dbr => "DBR",
            Protocol::Smurf => "SMURF",
            Protocol::BaSmurf => "BA-SMURF",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_endpoints(
    belief: &NetworkBelief,
    source: usize,
    dest: usize,
) -> Result<(), RoutingError> {
    belief.check_node(source)?;
    belief.check_node(dest)?;
    if source == dest {
        return Err(RoutingError::SameEndpoints(source));
    }
    Ok(())
}

/// Builds the RouteResult for a selected path: per-hop expected weights in
/// travel direction, beam aims, and the discounted bottleneck.
fn finish_route(
    belief: &NetworkBelief,
    table: &LinkTable,
    path: Vec<usize>,
) -> Result<RouteResult, RoutingError> {
    let mut link_weights = Vec::with_capacity(path.len().saturating_sub(1));
    let mut beams = Vec::with_capacity(path.len().saturating_sub(1));
    for hop in path.windows(2) {
        let (tx, rx) = (hop[0], hop[1]);
        link_weights.push(*table.weight(tx, rx));
        let tx_aim =
            table.aim(tx, rx).ok_or(RoutingError::MissingLinkWeight { tx, rx })?;
        beams.push(HopBeam { tx, rx, tx_aim, rx_aim: reciprocal_angles(tx_aim) });
    }
    let bottleneck_capacity = route_capacity(&path, &link_weights, &belief.cross_traffic)?;
    Ok(RouteResult { path, bottleneck_capacity, link_weights, beams })
}

/// BA-SMURF route: widest path on cross-traffic-discounted expected
/// capacities (half-duplex included), then full-model evaluation.
pub fn route_basmurf(
    belief: &NetworkBelief,
    source: usize,
    dest: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RouteResult, RoutingError> {
    let table = link_table(belief, n_samples, seed)?;
    route_basmurf_with(belief, &table, source, dest)
}

/// BA-SMURF on a precomputed link table.
pub fn route_basmurf_with(
    belief: &NetworkBelief,
    table: &LinkTable,
    source: usize,
    dest: usize,
) -> Result<RouteResult, RoutingError> {
    check_endpoints(belief, source, dest)?;
    let k = belief.len();
    let mut graph = WeightedGraph::new(k);
    for a in 0..k {
        for b in (a + 1)..k {
            let fwd = table.weight(a, b);
            let bwd = table.weight(b, a);
            // An undirected edge is as good as its worse direction.
            let w = ((1.0 - belief.rho(a)) * fwd.expected_capacity / 2.0)
                .min((1.0 - belief.rho(b)) * bwd.expected_capacity / 2.0);
            if w > 0.0 {
                graph.add_edge(a, b, w);
            }
        }
    }
    let (path, _) = widest_path(&graph, source, dest)?;
    finish_route(belief, table, path)
}

/// SMURF route: most reliable single path, maximizing the product of link
/// existence probabilities (shortest path on `-ln p`), then full-model
/// evaluation.
pub fn route_smurf(
    belief: &NetworkBelief,
    source: usize,
    dest: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RouteResult, RoutingError> {
    let table = link_table(belief, n_samples, seed)?;
    route_smurf_with(belief, &table, source, dest)
}

/// SMURF on a precomputed link table.
pub fn route_smurf_with(
    belief: &NetworkBelief,
    table: &LinkTable,
    source: usize,
    dest: usize,
) -> Result<RouteResult, RoutingError> {
    check_endpoints(belief, source, dest)?;
    let k = belief.len();
    // Existence probability is symmetric under common random numbers, so an
    // undirected graph on -ln p is exact.
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for a in 0..k {
        for b in (a + 1)..k {
            let p = table.weight(a, b).existence_probability;
            if p > 0.0 {
                let cost = -p.ln();
                adj[a].push((b, cost));
                adj[b].push((a, cost));
            }
        }
    }
    let path = most_reliable_path(&adj, source, dest)
        .ok_or(RoutingError::Disconnected { from: source, to: dest })?;
    finish_route(belief, table, path)
}

/// Dijkstra on additive costs with (cost, hops) lexicographic relaxation and
/// smallest-id parent tie-breaking, so equal-reliability routes resolve
/// deterministically to the shortest, smallest-labelled one.
fn most_reliable_path(adj: &[Vec<(usize, f64)>], source: usize, dest: usize) -> Option<Vec<usize>> {
    #[derive(PartialEq)]
    struct Entry {
        cost: f64,
        hops: usize,
        node: usize,
    }
    impl Eq for Entry {}
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // Reversed for the max-heap.
            other
                .cost
                .partial_cmp(&self.cost)
                .expect("finite costs")
                .then(other.hops.cmp(&self.hops))
                .then(other.node.cmp(&self.node))
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let n = adj.len();
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n]; // cost, hops, parent
    let mut heap = BinaryHeap::new();
    best[source] = Some((0.0, 0, source));
    heap.push(Entry { cost: 0.0, hops: 0, node: source });
    while let Some(Entry { cost, hops, node }) = heap.pop() {
        let (bc, bh, _) = best[node].expect("pushed nodes have labels");
        if (cost, hops) > (bc, bh) {
            continue;
        }
        for &(nb, w) in &adj[node] {
            let cand = (cost + w, hops + 1, node);
            let better = match best[nb] {
                None => true,
                Some((c, h, par)) => {
                    (cand.0, cand.1) < (c, h) || ((cand.0, cand.1) == (c, h) && node < par)
                }
            };
            if better {
                best[nb] = Some(cand);
                heap.push(Entry { cost: cand.0, hops: cand.1, node: nb });
            }
        }
    }
    best[dest]?;
    let mut path = vec![dest];
    let mut cur = dest;
    while cur != source {
        let (_, _, parent) = best[cur].expect("reconstructed nodes were labelled");
        path.push(parent);
        cur = parent;
    }
    path.reverse();
    Some(path)
}

/// DBR route: links whose estimated distance is below the maximum range,
/// weighted by the deterministic capacity at the estimated distance, then
/// full-model evaluation.
pub fn route_dbr(
    belief: &NetworkBelief,
    source: usize,
    dest: usize,
    n_samples: usize,
    seed: u64,
) -> Result<RouteResult, RoutingError> {
    let table = link_table(belief, n_samples, seed)?;
    route_dbr_with(belief, &table, source, dest)
}

/// DBR on a precomputed link table (used only for the final evaluation; the
/// selection ignores uncertainty entirely).
pub fn route_dbr_with(
    belief: &NetworkBelief,
    table: &LinkTable,
    source: usize,
    dest: usize,
) -> Result<RouteResult, RoutingError> {
    check_endpoints(belief, source, dest)?;
    let k = belief.len();
    let mut graph = WeightedGraph::new(k);
    for a in 0..k {
        for b in (a + 1)..k {
            let d = (belief.swarm.estimates[a].mean - belief.swarm.estimates[b].mean).norm();
            if d < belief.channel.max_range_m && d > 0.0 {
                graph.add_edge(a, b, deterministic_capacity(d, &belief.channel));
            }
        }
    }
    let (path, _) = widest_path(&graph, source, dest)?;
    finish_route(belief, table, path)
}

/// Interference-free capacity of a perfectly aligned link at a known
/// distance.
pub fn deterministic_capacity(distance_m: f64, channel: &ChannelParams) -> f64 {
    if distance_m > channel.max_range_m {
        return 0.0;
    }
    let d = distance_m.max(MIN_LINK_DISTANCE);
    let attenuation = path_loss(d, channel).expect("distance clamped positive");
    sinr_capacity(channel.tx_power_w * attenuation, 0.0, channel)
}

/// Computes one protocol's route on a shared link table.
pub fn route_with_protocol(
    protocol: Protocol,
    belief: &NetworkBelief,
    table: &LinkTable,
    source: usize,
    dest: usize,
) -> Result<RouteResult, RoutingError> {
    match protocol {
        Protocol::Dbr => route_dbr_with(belief, table, source, dest),
        Protocol::Smurf => route_smurf_with(belief, table, source, dest),
        Protocol::BaSmurf => route_basmurf_with(belief, table, source, dest),
    }
}

/// TDMA time shares: a UAV appearing in `k` routes grants each of them a
/// `1/k` share, and a route's share is the minimum over its nodes.
pub fn tdma_share(routes: &[RouteResult]) -> Vec<f64> {
    let mut counts: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for route in routes {
        for &node in &route.path {
            *counts.entry(node).or_insert(0) += 1;
        }
    }
    routes
        .iter()
        .map(|route| {
            route
                .path
                .iter()
                .map(|node| 1.0 / counts[node] as f64)
                .fold(1.0f64, f64::min)
        })
        .collect()
}
