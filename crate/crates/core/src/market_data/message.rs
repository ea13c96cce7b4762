use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{record_error, EventType, MboEvent, Side, Timestamp};
use crate::error::{Error, Result};

/// Parse one message row: `time,type,order_id,size,price,direction`.
///
/// `row` is 1-based and only used for error reporting.
pub fn parse_message_line(line: &str, row: usize) -> Result<MboEvent> {
    let mut fields = line.trim_end().split(',');
    let mut next = |name: &str| {
        fields
            .next()
            .ok_or_else(|| record_error(row, format!("missing {name} column")))
    };
    let time: Timestamp = next("time")?
        .parse()
        .map_err(|e: String| record_error(row, e))?;
    let type_code = parse_int(next("type")?, row, "type")?;
    let event_type = EventType::from_code(type_code)
        .ok_or_else(|| record_error(row, format!("unknown event type {type_code}")))?;
    let order_id = parse_int(next("order id")?, row, "order id")?;
    let size = parse_int(next("size")?, row, "size")?;
    let price = parse_int(next("price")?, row, "price")?;
    let direction = parse_int(next("direction")?, row, "direction")?;
    if fields.next().is_some() {
        return Err(record_error(row, "expected 6 columns"));
    }
    let side = Side::from_direction(direction)
        .ok_or_else(|| record_error(row, format!("undefined direction {direction}")))?;
    if order_id < 0 || size < 0 {
        return Err(record_error(row, "negative order id or size"));
    }
    let event = MboEvent {
        time,
        event_type,
        order_id: order_id as u64,
        size: size as u64,
        price,
        side,
    };
    event.validate().map_err(|e| record_error(row, e))?;
    Ok(event)
}

fn parse_int(field: &str, row: usize, name: &str) -> Result<i64> {
    field
        .parse()
        .map_err(|_| record_error(row, format!("bad {name} {field:?}")))
}

/// Streaming reader over a message file. Yields record-level errors and
/// stops the stream with an error when time goes backwards.
pub struct MessageReader<R> {
    lines: std::io::Lines<R>,
    row: usize,
    last: Option<Timestamp>,
    done: bool,
}

impl<R: BufRead> MessageReader<R> {
    pub fn new(reader: R) -> Self {
        MessageReader {
            lines: reader.lines(),
            row: 0,
            last: None,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for MessageReader<R> {
    type Item = Result<MboEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io("<message stream>", e)));
                }
            };
            self.row += 1;
            if line.trim().is_empty() {
                continue;
            }
            let event = match parse_message_line(&line, self.row) {
                Ok(ev) => ev,
                Err(e) => return Some(Err(e)),
            };
            if let Some(prev) = self.last {
                if event.time < prev {
                    self.done = true;
                    return Some(Err(Error::NonMonotoneTime {
                        row: self.row,
                        time: event.time.to_string(),
                        previous: prev.to_string(),
                    }));
                }
            }
            self.last = Some(event.time);
            return Some(Ok(event));
        }
    }
}

/// Parse a whole message stream, failing on the first bad row.
pub fn parse_message_str(text: &str) -> Result<Vec<MboEvent>> {
    MessageReader::new(text.as_bytes()).collect()
}

pub fn parse_message_file(path: &Path) -> Result<Vec<MboEvent>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    MessageReader::new(BufReader::with_capacity(1 << 20, file)).collect()
}

/// Append one message row (no trailing newline).
pub fn format_message(event: &MboEvent, out: &mut String) {
    let _ = write!(
        out,
        "{},{},{},{},{},{}",
        event.time,
        event.event_type.code(),
        event.order_id,
        event.size,
        event.price,
        event.side.direction()
    );
}

pub fn serialize_messages(events: &[MboEvent]) -> String {
    let mut out = String::with_capacity(events.len() * 48);
    for event in events {
        format_message(event, &mut out);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_add_bid() {
        let ev = parse_message_line("34200.123456789,1,12345,100,5000000,1", 1).unwrap();
        assert_eq!(ev.event_type, EventType::Add);
        assert_eq!(ev.side, Side::Bid);
        assert_eq!(ev.size, 100);
        assert_eq!(ev.price, 5_000_000);
        assert_eq!(ev.order_id, 12345);
        assert_eq!(ev.time.nanos(), 34_200_123_456_789);
    }

    #[test]
    fn decodes_delete_ask() {
        let ev = parse_message_line("36000.5,3,777,50,1234500,-1", 1).unwrap();
        assert_eq!(ev.event_type, EventType::Delete);
        assert_eq!(ev.side, Side::Ask);
        assert_eq!(ev.size, 50);
        assert_eq!(ev.price, 1_234_500);
        assert_eq!(ev.time.as_secs_f64(), 36000.5);
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert!(parse_message_str("").unwrap().is_empty());
    }

    #[test]
    fn malformed_rows_report_row_number() {
        let text = "34200.1,1,1,100,1000000,1\n34200.2,9,2,100,1000000,1\n";
        match parse_message_str(text) {
            Err(Error::Record { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
        for bad in [
            "34200.1,1,1,100,1000000",
            "34200.1,1,1,100,1000000,1,7",
            "34200.1,1,1,0,1000000,1",
            "34200.1,1,1,100,-5,1",
            "34200.1,1,1,100,1000000,0",
            "x,1,1,100,1000000,1",
        ] {
            assert!(parse_message_line(bad, 1).is_err(), "{bad}");
        }
    }

    #[test]
    fn halt_rows_are_accepted() {
        let ev = parse_message_line("40000.0,7,0,0,-1,-1", 1).unwrap();
        assert_eq!(ev.event_type, EventType::Halt);
    }

    #[test]
    fn time_going_backwards_is_a_stream_error() {
        let text = "34200.5,1,1,100,1000000,1\n34200.4,1,2,100,1000000,1\n";
        assert!(matches!(
            parse_message_str(text),
            Err(Error::NonMonotoneTime { row: 2, .. })
        ));
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = "34200.123456789,1,12345,100,5000000,1\n36000.5,3,777,50,1234500,-1\n";
        let events = parse_message_str(text).unwrap();
        assert_eq!(serialize_messages(&events), text);
    }
}
