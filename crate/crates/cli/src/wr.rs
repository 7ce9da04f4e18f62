//! `--wr` direction-set specifications.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use tightcr::designs::{
    circle_set, circlepoints, grid_dnd, grid_dnd_rows, make_wr, make_wr_rows, Construction, DirectionSet,
};
use tightcr::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WrSpec {
    MakeWr { big_n: usize, k: usize, phi0: f64 },
    Dnd { n: usize, d: usize },
    Circle { n: usize },
    Csv(PathBuf),
}

impl WrSpec {
    pub const FAST: WrSpec = WrSpec::MakeWr {
        big_n: 30,
        k: 30,
        phi0: 1.2,
    };
    pub const PAPER: WrSpec = WrSpec::MakeWr {
        big_n: 70,
        k: 100,
        phi0: 1.2,
    };

    /// Default set for a model with `d` parameters.
    pub fn default_for(d: usize, fast: bool) -> Result<WrSpec> {
        match d {
            1 => Ok(WrSpec::Circle { n: if fast { 100 } else { 400 } }),
            2 => Ok(if fast { Self::FAST } else { Self::PAPER }),
            3 => Ok(WrSpec::Dnd {
                n: if fast { 12 } else { 24 },
                d: 3,
            }),
            _ => Err(Error::InvalidParameter(format!("no default direction set for d = {d}; pass --wr"))),
        }
    }

    pub fn build(&self) -> Result<DirectionSet> {
        match self {
            WrSpec::MakeWr { big_n, k, phi0 } => make_wr(*big_n, *k, *phi0),
            WrSpec::Dnd { n, d } => grid_dnd(*n, *d),
            WrSpec::Circle { n } => circle_set(*n),
            WrSpec::Csv(p) => DirectionSet::read_csv(BufReader::new(File::open(p)?)),
        }
    }

    /// Rows as constructed, before deduplication.
    pub fn raw_rows(&self) -> Result<(usize, Construction, Vec<Vec<f64>>)> {
        match self {
            WrSpec::MakeWr { big_n, k, phi0 } => Ok((2, Construction::LayeredMakeWR, make_wr_rows(*big_n, *k, *phi0)?)),
            WrSpec::Dnd { n, d } => Ok((*d, Construction::GridDnd, grid_dnd_rows(*n, *d)?)),
            WrSpec::Circle { n } => Ok((
                1,
                Construction::Circle,
                circlepoints(*n)?.iter().map(|p| p.to_vec()).collect(),
            )),
            WrSpec::Csv(_) => {
                let w = self.build()?;
                Ok((w.d, w.construction, w.vectors))
            }
        }
    }
}

fn numbers<T: FromStr>(s: &str, count: usize, what: &str) -> Result<Vec<T>> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != count {
        return Err(Error::Parse(format!("{what} expects {count} comma-separated values, got {s:?}")));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| Error::Parse(format!("{what}: cannot parse {p:?}"))))
        .collect()
}

impl FromStr for WrSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "makewr" if args.is_empty() => Ok(Self::PAPER),
            "makewr" => {
                let parts: Vec<&str> = args.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("makewr expects N,k,phi0, got {args:?}")));
                }
                let v: Vec<usize> = numbers(&parts[..2].join(","), 2, "makewr")?;
                let phi0 = numbers::<f64>(parts[2], 1, "makewr phi0")?[0];
                Ok(WrSpec::MakeWr {
                    big_n: v[0],
                    k: v[1],
                    phi0,
                })
            }
            "dnd" => {
                let v: Vec<usize> = numbers(args, 2, "dnd")?;
                Ok(WrSpec::Dnd { n: v[0], d: v[1] })
            }
            "circle" => Ok(WrSpec::Circle {
                n: numbers(args, 1, "circle")?[0],
            }),
            "csv" if !args.is_empty() => Ok(WrSpec::Csv(PathBuf::from(args))),
            _ => Err(Error::Parse(format!(
                "unknown direction set {s:?}; use makewr[:N,k,phi0], dnd:n,d, circle:N or csv:PATH"
            ))),
        }
    }
}
