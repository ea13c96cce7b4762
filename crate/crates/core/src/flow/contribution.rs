use crate::market_data::{EventType, MboEvent, Side};

/// The six best-level flow terms: limit adds `L`, cancels `D` and trades `M`
/// on the bid and ask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FlowTerm {
    BidAdd,
    BidCancel,
    BidTrade,
    AskAdd,
    AskCancel,
    AskTrade,
}

impl FlowTerm {
    pub const ALL: [FlowTerm; 6] = [
        FlowTerm::BidAdd,
        FlowTerm::BidCancel,
        FlowTerm::BidTrade,
        FlowTerm::AskAdd,
        FlowTerm::AskCancel,
        FlowTerm::AskTrade,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Sign in `L^b - D^b + M^b - L^a + D^a - M^a`; `legacy_trade_sign`
    /// flips the two trade terms.
    pub fn sign(self, legacy_trade_sign: bool) -> i64 {
        let trade = if legacy_trade_sign { -1 } else { 1 };
        match self {
            FlowTerm::BidAdd => 1,
            FlowTerm::BidCancel => -1,
            FlowTerm::BidTrade => trade,
            FlowTerm::AskAdd => -1,
            FlowTerm::AskCancel => 1,
            FlowTerm::AskTrade => -trade,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowContribution {
    pub term: Option<FlowTerm>,
    pub size: u64,
    pub count: u64,
}

impl FlowContribution {
    pub const NONE: FlowContribution = FlowContribution {
        term: None,
        size: 0,
        count: 0,
    };

    fn of(term: FlowTerm, size: u64) -> Self {
        FlowContribution {
            term: Some(term),
            size,
            count: 1,
        }
    }
}

/// Classify an event against the best quotes in force just before it.
///
/// Adds count when at or through their own best (an empty side counts as
/// improvable); cancels and visible executions count only at exactly the
/// best price of their side.
pub fn classify_contribution(
    event: &MboEvent,
    best_bid: Option<i64>,
    best_ask: Option<i64>,
) -> FlowContribution {
    let best = match event.side {
        Side::Bid => best_bid,
        Side::Ask => best_ask,
    };
    let at_best = best == Some(event.price);
    let term = match (event.event_type, event.side) {
        (EventType::Add, Side::Bid) if best.is_none_or(|b| event.price >= b) => FlowTerm::BidAdd,
        (EventType::Add, Side::Ask) if best.is_none_or(|a| event.price <= a) => FlowTerm::AskAdd,
        (EventType::PartialCancel | EventType::Delete, Side::Bid) if at_best => FlowTerm::BidCancel,
        (EventType::PartialCancel | EventType::Delete, Side::Ask) if at_best => FlowTerm::AskCancel,
        (EventType::ExecVisible, Side::Bid) if at_best => FlowTerm::BidTrade,
        (EventType::ExecVisible, Side::Ask) if at_best => FlowTerm::AskTrade,
        _ => return FlowContribution::NONE,
    };
    FlowContribution::of(term, event.size)
}
