use crate::instance::{ChargeSite, Instance, Node};

/// Route-so-far of one EV during greedy construction.
#[derive(Debug, Clone)]
pub(crate) struct EvState {
    pub ev: usize,
    pub nodes: Vec<Node>,
    /// Departure time from the last node.
    pub time: f64,
    /// Residual energy on leaving the last node.
    pub energy: f64,
}

/// Outcome of a tentative delivery.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Probe {
    pub departure: f64,
    pub energy: f64,
}

impl EvState {
    pub fn new(inst: &Instance, ev: usize) -> Self {
        Self {
            ev,
            nodes: vec![Node::Depot],
            time: 0.0,
            energy: inst.battery_capacity(),
        }
    }

    pub fn last(&self) -> Node {
        *self.nodes.last().expect("route starts at depot")
    }

    pub fn last_is_delivery(&self) -> bool {
        matches!(self.last(), Node::Delivery(_))
    }

    /// Whether the EV can serve delivery `d` next: depart within the window
    /// and keep `reserve` kWh afterwards.
    pub fn probe(&self, inst: &Instance, d: usize, reserve: f64) -> Option<Probe> {
        let node = Node::Delivery(d);
        let from = self.last();
        let energy = self.energy - inst.psi(self.ev, from, node);
        if energy < reserve {
            return None;
        }
        let del = &inst.deliveries()[d];
        let arrival = self.time + inst.gamma(self.ev, from, node);
        let departure = arrival.max(del.window_start) + inst.unload_time();
        if departure > del.window_end {
            return None;
        }
        Some(Probe { departure, energy })
    }

    pub fn commit(&mut self, d: usize, p: Probe) {
        self.nodes.push(Node::Delivery(d));
        self.time = p.departure;
        self.energy = p.energy;
    }

    /// Drives to `site` and refills. Only legal straight after a delivery,
    /// and only if the site is reachable on the residual charge.
    pub fn charge(&mut self, inst: &Instance, site: ChargeSite) -> bool {
        if !self.last_is_delivery() {
            return false;
        }
        let node: Node = site.into();
        let from = self.last();
        let arrive_energy = self.energy - inst.psi(self.ev, from, node);
        if arrive_energy < 0.0 {
            return false;
        }
        let cap = inst.battery_capacity();
        let arrival = self.time + inst.gamma(self.ev, from, node);
        self.time = arrival + inst.charge_duration(self.ev, site, cap - arrive_energy);
        self.energy = cap;
        self.nodes.push(node);
        true
    }

    /// Closes the route: drops trailing charge stops and returns home.
    pub fn finish(mut self) -> Vec<Node> {
        while self.nodes.len() > 1 && !self.last_is_delivery() {
            self.nodes.pop();
        }
        self.nodes.push(Node::Depot);
        self.nodes
    }
}

/// Energy an EV must keep after serving `d`: enough to return home and to
/// reach `site`, the stop it would charge at next.
pub(crate) fn reserve(inst: &Instance, ev: usize, d: usize, site: Option<ChargeSite>) -> f64 {
    let node = Node::Delivery(d);
    let home = inst.psi(ev, node, Node::Depot);
    match site {
        Some(s) => home.max(inst.psi(ev, node, s.into())),
        None => home,
    }
}

/// Charge site nearest to `from` by travel distance, ties to the lower index
/// (depot first).
pub(crate) fn nearest_site_by_distance(inst: &Instance, from: Node) -> Option<ChargeSite> {
    let mut best: Option<(f64, ChargeSite)> = None;
    for site in inst.charge_sites() {
        let d = inst.distance(from, site.into());
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, site));
        }
    }
    best.map(|(_, s)| s)
}
