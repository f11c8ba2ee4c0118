//! ROS object names to DDS (action, topic, partition) legs.
//!
//! Every `(kind, verb)` pair maps onto a fixed list of channels. A channel is a
//! DDS action plus a prefix (`rt` topics, `rq`/`rr` service request/reply legs)
//! and an optional name suffix. Parameters and actions use their own prefixes
//! (`pq`/`pr`, `aq`/`ar`/`af`) so that no glob over one kind can reach the
//! legs of another.
//!
//! * ardent: topic = last segment of `name + suffix`, partition = prefix +
//!   the remaining namespace.
//! * bouncy: topic = prefix + `name + suffix`, default partition.

use alloc::string::String;
use alloc::vec::Vec;

use super::{DdsAction, MappingMode};
use crate::error::MapError;
use crate::glob::{split_last_segment, SEPARATOR};
use crate::policy::{ObjectKind, Verb};

pub const TOPIC_PREFIX: &str = "rt";
pub const REQUEST_PREFIX: &str = "rq";
pub const REPLY_PREFIX: &str = "rr";
pub const PARAMETER_REQUEST_PREFIX: &str = "pq";
pub const PARAMETER_REPLY_PREFIX: &str = "pr";
pub const ACTION_REQUEST_PREFIX: &str = "aq";
pub const ACTION_REPLY_PREFIX: &str = "ar";
pub const ACTION_FEEDBACK_PREFIX: &str = "af";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel {
    pub action: DdsAction,
    pub prefix: &'static str,
    pub suffix: &'static str,
}

const fn ch(action: DdsAction, prefix: &'static str, suffix: &'static str) -> Channel {
    Channel {
        action,
        prefix,
        suffix,
    }
}

use DdsAction::{Publish as Pub, Relay as Rel, Subscribe as Sub};

const TOPIC_PUBLISH: [Channel; 1] = [ch(Pub, TOPIC_PREFIX, "")];
const TOPIC_SUBSCRIBE: [Channel; 1] = [ch(Sub, TOPIC_PREFIX, "")];
const TOPIC_RELAY: [Channel; 1] = [ch(Rel, TOPIC_PREFIX, "")];
const SERVICE_CALL: [Channel; 2] = [ch(Pub, REQUEST_PREFIX, ""), ch(Sub, REPLY_PREFIX, "")];
const SERVICE_REPLY: [Channel; 2] = [ch(Sub, REQUEST_PREFIX, ""), ch(Pub, REPLY_PREFIX, "")];
const PARAM_READ: [Channel; 2] = [
    ch(Pub, PARAMETER_REQUEST_PREFIX, "/get_parameters"),
    ch(Sub, PARAMETER_REPLY_PREFIX, "/get_parameters"),
];
const PARAM_WRITE: [Channel; 2] = [
    ch(Pub, PARAMETER_REQUEST_PREFIX, "/set_parameters"),
    ch(Sub, PARAMETER_REPLY_PREFIX, "/set_parameters"),
];
const ACTION_CALL: [Channel; 2] = [
    ch(Pub, ACTION_REQUEST_PREFIX, "/_action/send_goal"),
    ch(Sub, ACTION_REPLY_PREFIX, "/_action/send_goal"),
];
const ACTION_CANCEL: [Channel; 2] = [
    ch(Pub, ACTION_REQUEST_PREFIX, "/_action/cancel_goal"),
    ch(Sub, ACTION_REPLY_PREFIX, "/_action/cancel_goal"),
];
const ACTION_FEEDBACK: [Channel; 1] = [ch(Sub, ACTION_FEEDBACK_PREFIX, "/_action/feedback")];

/// Channels a `(kind, verb)` pair travels over in the given mode.
pub fn channels(kind: ObjectKind, verb: Verb, mode: MappingMode) -> Result<&'static [Channel], MapError> {
    if !kind.allows(verb) {
        return Err(MapError::IllegalVerb { kind, verb });
    }
    if kind == ObjectKind::Action && mode == MappingMode::Ardent {
        return Err(MapError::UnmappableKind { kind, mode });
    }
    Ok(match (kind, verb) {
        (ObjectKind::Topic, Verb::Publish) => &TOPIC_PUBLISH,
        (ObjectKind::Topic, Verb::Subscribe) => &TOPIC_SUBSCRIBE,
        (ObjectKind::Topic, Verb::Relay) => &TOPIC_RELAY,
        (ObjectKind::Service, Verb::Call) => &SERVICE_CALL,
        (ObjectKind::Service, Verb::Reply) => &SERVICE_REPLY,
        (ObjectKind::Parameter, Verb::Read) => &PARAM_READ,
        (ObjectKind::Parameter, Verb::Write) => &PARAM_WRITE,
        (ObjectKind::Action, Verb::Call) => &ACTION_CALL,
        (ObjectKind::Action, Verb::Cancel) => &ACTION_CANCEL,
        (ObjectKind::Action, Verb::Feedback) => &ACTION_FEEDBACK,
        _ => unreachable!("legality checked above"),
    })
}

/// One concrete transport leg of a ROS action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leg {
    pub action: DdsAction,
    pub topic: String,
    pub partition: String,
}

/// Criteria expressions covering the legs of every object a pattern selects.
/// `partition: None` means the default partition only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LegPattern {
    pub action: DdsAction,
    pub topic: String,
    pub partition: Option<String>,
}

fn concat(a: &str, b: &str) -> String {
    let mut s = String::with_capacity(a.len() + b.len());
    s.push_str(a);
    s.push_str(b);
    s
}

/// Maps an absolute object name to its transport legs.
pub fn map_object(
    kind: ObjectKind,
    name: &str,
    verb: Verb,
    mode: MappingMode,
) -> Result<Vec<Leg>, MapError> {
    if !name.starts_with(SEPARATOR) {
        return Err(MapError::NotAbsolute(name.into()));
    }
    let channels = channels(kind, verb, mode)?;
    Ok(channels
        .iter()
        .map(|c| {
            let full = concat(name, c.suffix);
            match mode {
                MappingMode::Ardent => {
                    let cut = full.rfind(SEPARATOR).unwrap_or(0);
                    Leg {
                        action: c.action,
                        topic: full[cut + 1..].into(),
                        partition: concat(c.prefix, &full[..cut]),
                    }
                }
                MappingMode::Bouncy => Leg {
                    action: c.action,
                    topic: concat(c.prefix, &full),
                    partition: String::new(),
                },
            }
        })
        .collect())
}

/// Maps an absolute object pattern (already `~`-expanded) to leg patterns such
/// that a leg of object `o` is matched by some returned pattern exactly when the
/// source pattern matches `o`.
pub fn map_pattern(
    kind: ObjectKind,
    pattern: &str,
    verb: Verb,
    mode: MappingMode,
) -> Result<Vec<LegPattern>, MapError> {
    if !pattern.starts_with(SEPARATOR) {
        return Err(MapError::NotAbsolute(pattern.into()));
    }
    let channels = channels(kind, verb, mode)?;
    let mut out = Vec::new();
    for c in channels {
        let full = concat(pattern, c.suffix);
        match mode {
            MappingMode::Ardent => {
                for (topic, ns) in split_last_segment(&full) {
                    out.push(LegPattern {
                        action: c.action,
                        topic,
                        partition: Some(concat(c.prefix, &ns)),
                    });
                }
            }
            MappingMode::Bouncy => out.push(LegPattern {
                action: c.action,
                topic: concat(c.prefix, &full),
                partition: None,
            }),
        }
    }
    Ok(out)
}
