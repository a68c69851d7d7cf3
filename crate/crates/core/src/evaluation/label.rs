use std::fmt;
use std::str::FromStr;

/// Emergent behavior classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Aggregation,
    CyclicPursuit,
    Dispersal,
    Milling,
    WallFollowing,
    Random,
}

impl Label {
    pub const ALL: [Label; 6] = [
        Label::Aggregation,
        Label::CyclicPursuit,
        Label::Dispersal,
        Label::Milling,
        Label::WallFollowing,
        Label::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Aggregation => "aggregation",
            Label::CyclicPursuit => "cyclic_pursuit",
            Label::Dispersal => "dispersal",
            Label::Milling => "milling",
            Label::WallFollowing => "wall_following",
            Label::Random => "random",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown behavior label '{s}'"))
    }
}
