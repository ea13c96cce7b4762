use serde::{Deserialize, Serialize};

use super::{EventType, MboEvent, Timestamp};
use crate::error::{Error, Result};

/// Regular trading session and event-type filter.
///
/// The interval is closed: events at exactly 09:30:00 and 16:00:00 are kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Seconds after midnight.
    pub session_start: u64,
    pub session_end: u64,
    /// LOBSTER event type codes dropped before any processing.
    pub excluded_event_types: Vec<u8>,
    pub include_hidden_executions: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            session_start: 34_200,
            session_end: 57_600,
            excluded_event_types: vec![EventType::Auction.code(), EventType::Halt.code()],
            include_hidden_executions: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.session_end <= self.session_start {
            return Err(Error::Config("session_end must follow session_start".into()));
        }
        Ok(())
    }

    pub fn start(&self) -> Timestamp {
        Timestamp::from_secs(self.session_start)
    }

    pub fn end(&self) -> Timestamp {
        Timestamp::from_secs(self.session_end)
    }

    pub fn contains(&self, time: Timestamp) -> bool {
        time >= self.start() && time <= self.end()
    }

    pub fn keeps(&self, event: &MboEvent) -> bool {
        if !self.contains(event.time) {
            return false;
        }
        if self.excluded_event_types.contains(&event.event_type.code()) {
            return false;
        }
        event.event_type != EventType::ExecHidden || self.include_hidden_executions
    }
}

/// Keep in-session events of the retained types, in order.
pub fn filter_session(events: &[MboEvent], config: &SessionConfig) -> Vec<MboEvent> {
    events.iter().filter(|e| config.keeps(e)).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Side;

    fn at(secs_nanos: u64, kind: EventType) -> MboEvent {
        MboEvent::new(
            Timestamp::from_nanos(secs_nanos),
            kind,
            1,
            100,
            1_000_000,
            Side::Bid,
        )
    }

    const S: u64 = 1_000_000_000;

    #[test]
    fn drops_pre_open_events() {
        let cfg = SessionConfig::default();
        assert!(filter_session(&[at(34_100 * S, EventType::Add)], &cfg).is_empty());
    }

    #[test]
    fn drops_auctions_and_halts() {
        let cfg = SessionConfig::default();
        let kept = filter_session(
            &[at(40_000 * S, EventType::Auction), at(40_000 * S, EventType::Halt)],
            &cfg,
        );
        assert!(kept.is_empty());
    }

    #[test]
    fn boundaries_are_inclusive() {
        let cfg = SessionConfig::default();
        let events = [
            at(34_200 * S, EventType::Add),
            at(57_600 * S, EventType::Add),
            at(57_600 * S + 1, EventType::Add),
        ];
        assert_eq!(filter_session(&events, &cfg).len(), 2);
    }

    #[test]
    fn hidden_executions_follow_the_flag() {
        let mut cfg = SessionConfig::default();
        let events = [at(40_000 * S, EventType::ExecHidden)];
        assert!(filter_session(&events, &cfg).is_empty());
        cfg.include_hidden_executions = true;
        assert_eq!(filter_session(&events, &cfg).len(), 1);
    }

    #[test]
    fn session_is_thirteen_half_hours() {
        let cfg = SessionConfig::default();
        assert_eq!(cfg.session_end - cfg.session_start, 13 * 1800);
    }
}
