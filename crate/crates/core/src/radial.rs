use serde::{Deserialize, Serialize};
use std::fmt;

/// The four components of the radial set over the light cone at infinity.
///
/// `Plus` fiber sign marks sinks of the Hamilton flow, `Minus` marks sources;
/// the cap is the future (`S+`) or past (`S-`) half of the boundary light cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RadialSet {
    /// SN*+S+
    SinkFuture,
    /// SN*-S+
    SourceFuture,
    /// SN*+S-
    SinkPast,
    /// SN*-S-
    SourcePast,
}

impl RadialSet {
    pub const ALL: [RadialSet; 4] = [
        RadialSet::SinkFuture,
        RadialSet::SourceFuture,
        RadialSet::SinkPast,
        RadialSet::SourcePast,
    ];

    pub fn from_parts(sink: bool, future: bool) -> Self {
        match (sink, future) {
            (true, true) => RadialSet::SinkFuture,
            (false, true) => RadialSet::SourceFuture,
            (true, false) => RadialSet::SinkPast,
            (false, false) => RadialSet::SourcePast,
        }
    }

    pub fn is_sink(self) -> bool {
        matches!(self, RadialSet::SinkFuture | RadialSet::SinkPast)
    }

    pub fn is_future(self) -> bool {
        matches!(self, RadialSet::SinkFuture | RadialSet::SourceFuture)
    }

    pub fn label(self) -> &'static str {
        match self {
            RadialSet::SinkFuture => "SN*+S+",
            RadialSet::SourceFuture => "SN*-S+",
            RadialSet::SinkPast => "SN*+S-",
            RadialSet::SourcePast => "SN*-S-",
        }
    }
}

impl fmt::Display for RadialSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Values of an order function at the four radial sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialValues {
    pub sink_future: f64,
    pub source_future: f64,
    pub sink_past: f64,
    pub source_past: f64,
}

impl RadialValues {
    pub fn constant(v: f64) -> Self {
        Self { sink_future: v, source_future: v, sink_past: v, source_past: v }
    }

    pub fn get(&self, set: RadialSet) -> f64 {
        match set {
            RadialSet::SinkFuture => self.sink_future,
            RadialSet::SourceFuture => self.source_future,
            RadialSet::SinkPast => self.sink_past,
            RadialSet::SourcePast => self.source_past,
        }
    }
}
