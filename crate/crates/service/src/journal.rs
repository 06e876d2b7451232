//! Append-only JSON-lines journal of submissions and tick outcomes.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Booking, BookingRequest, RequestId, RequestStatus, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Submitted {
        request: Box<BookingRequest>,
    },
    Tick {
        now: i64,
        outcomes: Vec<(RequestId, RequestStatus)>,
        bookings: Vec<Booking>,
    },
}

pub struct Journal {
    file: File,
}

impl Journal {
    /// Opens (creating if needed) the journal and returns the events already in it.
    pub fn open(path: &Path) -> Result<(Journal, Vec<Event>), ServiceError> {
        let mut events = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event = serde_json::from_str(&line).map_err(|e| ServiceError::Replay {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                events.push(event);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok((Journal { file }, events))
    }

    pub fn append(&mut self, event: &Event) -> Result<(), ServiceError> {
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}
