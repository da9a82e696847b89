//! Line-oriented scenario files: one directive per line, `#` comments,
//! decimal numbers with `.` separators. Unknown or duplicated directives
//! are rejected with their line number.

use catchup::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Sweeping,
    Lipschitz,
    SetValued,
    Mixed,
    Skorohod,
    SkorohodStieltjes,
    SecondOrder,
    StateDependent,
    FractionalBvp,
    FractionalCoupled,
}

impl ProblemKind {
    pub fn parse(word: &str) -> Option<Self> {
        Some(match word {
            "sweeping" => Self::Sweeping,
            "lipschitz" => Self::Lipschitz,
            "set-valued" => Self::SetValued,
            "mixed" => Self::Mixed,
            "skorohod" => Self::Skorohod,
            "skorohod-stieltjes" => Self::SkorohodStieltjes,
            "second-order" => Self::SecondOrder,
            "state-dependent" => Self::StateDependent,
            "fractional-bvp" => Self::FractionalBvp,
            "fractional-coupled" => Self::FractionalCoupled,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sweeping => "sweeping",
            Self::Lipschitz => "lipschitz",
            Self::SetValued => "set-valued",
            Self::Mixed => "mixed",
            Self::Skorohod => "skorohod",
            Self::SkorohodStieltjes => "skorohod-stieltjes",
            Self::SecondOrder => "second-order",
            Self::StateDependent => "state-dependent",
            Self::FractionalBvp => "fractional-bvp",
            Self::FractionalCoupled => "fractional-coupled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    MovingBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        velocity: Vec<f64>,
    },
    JumpBox {
        at: f64,
        lower1: Vec<f64>,
        upper1: Vec<f64>,
        lower2: Vec<f64>,
        upper2: Vec<f64>,
    },
    StateInterval {
        halfwidth: f64,
    },
    Psd {
        dim: usize,
        entries: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Constant(Vec<f64>),
    Linear { a: f64, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetForcingSpec {
    BallMinNorm { radius: f64 },
    BoxMinNorm { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Constant(Vec<f64>),
    LinearX(f64),
    LinearU(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZetaSpec {
    Constant(f64),
    Linear { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalSpec {
    pub alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ProblemKind,
    pub horizon: f64,
    pub set: Option<SetSpec>,
    pub knots: Vec<(f64, f64)>,
    pub atoms: Vec<(f64, f64)>,
    pub u0: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub forcing: Option<ForcingSpec>,
    pub set_forcing: Option<SetForcingSpec>,
    pub coupling: Option<CouplingSpec>,
    pub driver: Vec<(f64, Vec<f64>)>,
    pub fractional: Option<FractionalSpec>,
    pub gamma_bump: Option<f64>,
    pub bound: Option<f64>,
    pub zeta: Option<ZetaSpec>,
    pub tol: f64,
    pub eps0: f64,
    pub factor: f64,
    pub max_iters: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            kind: ProblemKind::Sweeping,
            horizon: 1.0,
            set: None,
            knots: Vec::new(),
            atoms: Vec::new(),
            u0: None,
            x0: None,
            y0: None,
            forcing: None,
            set_forcing: None,
            coupling: None,
            driver: Vec::new(),
            fractional: None,
            gamma_bump: None,
            bound: None,
            zeta: None,
            tol: 1e-6,
            eps0: 1e-2,
            factor: 0.5,
            max_iters: 40,
        }
    }
}

fn bad(lineno: usize, msg: impl Into<String>) -> Error {
    Error::Domain(format!("line {}: {}", lineno, msg.into()))
}

fn parse_nums(lineno: usize, parts: &[&str]) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(lineno, format!("expected a finite number, got `{p}`")))
        })
        .collect()
}

/// Box bounds additionally admit the keywords `inf` and `-inf`.
fn parse_bounds(lineno: usize, parts: &[&str]) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|p| match *p {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(lineno, format!("expected a bound, got `{other}`"))),
        })
        .collect()
}

fn split_pair(lineno: usize, nums: Vec<f64>, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    if nums.is_empty() || !nums.len().is_multiple_of(2) {
        return Err(bad(
            lineno,
            format!("{what} needs an even, positive number of bounds"),
        ));
    }
    let half = nums.len() / 2;
    Ok((nums[..half].to_vec(), nums[half..].to_vec()))
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut sc = Scenario::default();
    let mut seen: BTreeSet<&'static str> = BTreeSet::new();
    let mut kind_set = false;

    let claim = |key: &'static str, lineno: usize, seen: &mut BTreeSet<&'static str>| {
        if !seen.insert(key) {
            return Err(bad(lineno, format!("duplicate directive `{key}`")));
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts[0] {
            "problem" => {
                claim("problem", lineno, &mut seen)?;
                let word = parts
                    .get(1)
                    .ok_or_else(|| bad(lineno, "missing problem kind"))?;
                sc.kind = ProblemKind::parse(word)
                    .ok_or_else(|| bad(lineno, format!("unknown problem kind `{word}`")))?;
                kind_set = true;
            }
            "horizon" => {
                claim("horizon", lineno, &mut seen)?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 1 || nums[0] <= 0.0 {
                    return Err(bad(lineno, "horizon needs one positive number"));
                }
                sc.horizon = nums[0];
            }
            "knot" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 2 {
                    return Err(bad(lineno, "knot needs `knot <t> <value>`"));
                }
                sc.knots.push((nums[0], nums[1]));
            }
            "atom" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 2 {
                    return Err(bad(lineno, "atom needs `atom <t> <jump>`"));
                }
                sc.atoms.push((nums[0], nums[1]));
            }
            "set" => {
                claim("set", lineno, &mut seen)?;
                let variant = parts
                    .get(1)
                    .ok_or_else(|| bad(lineno, "missing set variant"))?;
                sc.set = Some(match *variant {
                    "box" => {
                        let (lower, upper) =
                            split_pair(lineno, parse_bounds(lineno, &parts[2..])?, "box")?;
                        SetSpec::Box { lower, upper }
                    }
                    "ball" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() < 2 {
                            return Err(bad(lineno, "ball needs `set ball <center...> <radius>`"));
                        }
                        let (center, radius) = nums.split_at(nums.len() - 1);
                        SetSpec::Ball {
                            center: center.to_vec(),
                            radius: radius[0],
                        }
                    }
                    "moving-box" => {
                        let vel_at = parts
                            .iter()
                            .position(|p| *p == "velocity")
                            .ok_or_else(|| bad(lineno, "moving-box needs a `velocity` marker"))?;
                        let (lower, upper) = split_pair(
                            lineno,
                            parse_nums(lineno, &parts[2..vel_at])?,
                            "moving-box",
                        )?;
                        let velocity = parse_nums(lineno, &parts[vel_at + 1..])?;
                        if velocity.len() != lower.len() {
                            return Err(bad(lineno, "velocity dimension mismatch"));
                        }
                        SetSpec::MovingBox {
                            lower,
                            upper,
                            velocity,
                        }
                    }
                    "jump-box" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() < 5 || (nums.len() - 1) % 4 != 0 {
                            return Err(bad(
                                lineno,
                                "jump-box needs `set jump-box <t> <lo1..> <hi1..> <lo2..> <hi2..>`",
                            ));
                        }
                        let d = (nums.len() - 1) / 4;
                        SetSpec::JumpBox {
                            at: nums[0],
                            lower1: nums[1..1 + d].to_vec(),
                            upper1: nums[1 + d..1 + 2 * d].to_vec(),
                            lower2: nums[1 + 2 * d..1 + 3 * d].to_vec(),
                            upper2: nums[1 + 3 * d..].to_vec(),
                        }
                    }
                    "state-interval" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 1 || nums[0] <= 0.0 {
                            return Err(bad(lineno, "state-interval needs one positive halfwidth"));
                        }
                        SetSpec::StateInterval { halfwidth: nums[0] }
                    }
                    other => return Err(bad(lineno, format!("unknown set variant `{other}`"))),
                });
            }
            "operator" => {
                claim("set", lineno, &mut seen)?;
                if parts.get(1) != Some(&"psd") {
                    return Err(bad(lineno, "only `operator psd <entries...>` is supported"));
                }
                let entries = parse_nums(lineno, &parts[2..])?;
                let dim = (entries.len() as f64).sqrt().round() as usize;
                if dim * dim != entries.len() || dim == 0 {
                    return Err(bad(
                        lineno,
                        "psd needs a square number of row-major entries",
                    ));
                }
                sc.set = Some(SetSpec::Psd { dim, entries });
            }
            "u0" | "x0" | "y0" => {
                let key: &'static str = match parts[0] {
                    "u0" => "u0",
                    "x0" => "x0",
                    _ => "y0",
                };
                claim(key, lineno, &mut seen)?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.is_empty() {
                    return Err(bad(lineno, format!("{key} needs at least one component")));
                }
                match key {
                    "u0" => sc.u0 = Some(nums),
                    "x0" => sc.x0 = Some(nums),
                    _ => sc.y0 = Some(nums),
                }
            }
            "forcing" => {
                let variant = parts
                    .get(1)
                    .ok_or_else(|| bad(lineno, "missing forcing preset"))?;
                match *variant {
                    "constant" => {
                        claim("forcing", lineno, &mut seen)?;
                        sc.forcing = Some(ForcingSpec::Constant(parse_nums(lineno, &parts[2..])?));
                    }
                    "linear" => {
                        claim("forcing", lineno, &mut seen)?;
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() < 2 {
                            return Err(bad(lineno, "linear needs `forcing linear <a> <b...>`"));
                        }
                        sc.forcing = Some(ForcingSpec::Linear {
                            a: nums[0],
                            b: nums[1..].to_vec(),
                        });
                    }
                    "ball-min-norm" => {
                        claim("forcing-set", lineno, &mut seen)?;
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 1 || nums[0] < 0.0 {
                            return Err(bad(lineno, "ball-min-norm needs one radius"));
                        }
                        sc.set_forcing = Some(SetForcingSpec::BallMinNorm { radius: nums[0] });
                    }
                    "box-min-norm" => {
                        claim("forcing-set", lineno, &mut seen)?;
                        let (lower, upper) =
                            split_pair(lineno, parse_nums(lineno, &parts[2..])?, "box-min-norm")?;
                        sc.set_forcing = Some(SetForcingSpec::BoxMinNorm { lower, upper });
                    }
                    other => return Err(bad(lineno, format!("unknown forcing preset `{other}`"))),
                }
            }
            "coupling" => {
                claim("coupling", lineno, &mut seen)?;
                let variant = parts
                    .get(1)
                    .ok_or_else(|| bad(lineno, "missing coupling preset"))?;
                sc.coupling = Some(match *variant {
                    "constant" => CouplingSpec::Constant(parse_nums(lineno, &parts[2..])?),
                    "linear-x" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 1 {
                            return Err(bad(lineno, "linear-x needs one coefficient"));
                        }
                        CouplingSpec::LinearX(nums[0])
                    }
                    "linear-u" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 1 {
                            return Err(bad(lineno, "linear-u needs one coefficient"));
                        }
                        CouplingSpec::LinearU(nums[0])
                    }
                    other => return Err(bad(lineno, format!("unknown coupling preset `{other}`"))),
                });
            }
            "driver" => {
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() < 2 {
                    return Err(bad(lineno, "driver needs `driver <t> <values...>`"));
                }
                sc.driver.push((nums[0], nums[1..].to_vec()));
            }
            "fractional" => {
                claim("fractional", lineno, &mut seen)?;
                let mut spec = FractionalSpec {
                    alpha: 0.0,
                    gamma: 0.0,
                    kappa: 0.0,
                    beta: 0.0,
                };
                for p in &parts[1..] {
                    let (key, value) = p
                        .split_once('=')
                        .ok_or_else(|| bad(lineno, format!("expected key=value, got `{p}`")))?;
                    let v: f64 = value
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| bad(lineno, format!("bad number `{value}`")))?;
                    match key {
                        "alpha" => spec.alpha = v,
                        "gamma" => spec.gamma = v,
                        "kappa" => spec.kappa = v,
                        "beta" => spec.beta = v,
                        other => {
                            return Err(bad(lineno, format!("unknown fractional key `{other}`")))
                        }
                    }
                }
                sc.fractional = Some(spec);
            }
            "gamma" => {
                claim("gamma", lineno, &mut seen)?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 1 || nums[0] < 0.0 {
                    return Err(bad(lineno, "gamma needs one nonnegative number"));
                }
                sc.gamma_bump = Some(nums[0]);
            }
            "bound" => {
                claim("bound", lineno, &mut seen)?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 1 || nums[0] < 0.0 {
                    return Err(bad(lineno, "bound needs one nonnegative number"));
                }
                sc.bound = Some(nums[0]);
            }
            "zeta" => {
                claim("zeta", lineno, &mut seen)?;
                let variant = parts
                    .get(1)
                    .ok_or_else(|| bad(lineno, "missing zeta preset"))?;
                sc.zeta = Some(match *variant {
                    "constant" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 1 {
                            return Err(bad(lineno, "zeta constant needs one value"));
                        }
                        ZetaSpec::Constant(nums[0])
                    }
                    "linear" => {
                        let nums = parse_nums(lineno, &parts[2..])?;
                        if nums.len() != 2 {
                            return Err(bad(lineno, "zeta linear needs `zeta linear <a> <b>`"));
                        }
                        ZetaSpec::Linear {
                            a: nums[0],
                            b: nums[1],
                        }
                    }
                    other => return Err(bad(lineno, format!("unknown zeta preset `{other}`"))),
                });
            }
            "tol" | "eps0" | "factor" => {
                let key: &'static str = match parts[0] {
                    "tol" => "tol",
                    "eps0" => "eps0",
                    _ => "factor",
                };
                claim(key, lineno, &mut seen)?;
                let nums = parse_nums(lineno, &parts[1..])?;
                if nums.len() != 1 || nums[0] <= 0.0 {
                    return Err(bad(lineno, format!("{key} needs one positive number")));
                }
                match key {
                    "tol" => sc.tol = nums[0],
                    "eps0" => sc.eps0 = nums[0],
                    _ => sc.factor = nums[0],
                }
            }
            "max-iters" => {
                claim("max-iters", lineno, &mut seen)?;
                let n: usize = parts
                    .get(1)
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| bad(lineno, "max-iters needs one positive integer"))?;
                if n == 0 {
                    return Err(bad(lineno, "max-iters must be positive"));
                }
                sc.max_iters = n;
            }
            other => return Err(bad(lineno, format!("unknown directive `{other}`"))),
        }
    }

    if !kind_set {
        return Err(Error::Domain("missing `problem <kind>` directive".into()));
    }
    validate(&sc)?;
    Ok(sc)
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(format!("scenario: {msg}")))
    }
}

fn validate(sc: &Scenario) -> Result<()> {
    use ProblemKind::*;
    if !(0.0 < sc.factor && sc.factor < 1.0) {
        return Err(Error::Domain("scenario: factor must lie in (0, 1)".into()));
    }
    match sc.kind {
        Sweeping => {
            require(sc.set.is_some(), "sweeping needs a `set`")?;
            require(sc.u0.is_some(), "sweeping needs `u0`")?;
        }
        Lipschitz => {
            require(sc.set.is_some(), "lipschitz needs a `set` or `operator`")?;
            require(sc.u0.is_some(), "lipschitz needs `u0`")?;
            require(
                sc.forcing.is_some(),
                "lipschitz needs a single-valued `forcing`",
            )?;
        }
        SetValued => {
            require(sc.set.is_some(), "set-valued needs a `set` or `operator`")?;
            require(sc.u0.is_some(), "set-valued needs `u0`")?;
            require(
                sc.set_forcing.is_some(),
                "set-valued needs a min-norm `forcing`",
            )?;
        }
        Mixed => {
            require(sc.set.is_some(), "mixed needs a `set` or `operator`")?;
            require(sc.u0.is_some(), "mixed needs `u0`")?;
            require(
                sc.forcing.is_some(),
                "mixed needs a single-valued `forcing`",
            )?;
            require(sc.set_forcing.is_some(), "mixed needs a min-norm `forcing`")?;
        }
        Skorohod => {
            require(sc.set.is_some(), "skorohod needs a `set` or `operator`")?;
            require(sc.y0.is_some(), "skorohod needs `y0`")?;
            require(
                sc.forcing.is_some(),
                "skorohod needs the drift as `forcing`",
            )?;
        }
        SkorohodStieltjes => {
            require(
                sc.set.is_some(),
                "skorohod-stieltjes needs a `set` or `operator`",
            )?;
            require(sc.y0.is_some(), "skorohod-stieltjes needs `y0`")?;
            require(
                sc.forcing.is_some(),
                "skorohod-stieltjes needs the drift as `forcing`",
            )?;
            require(
                sc.driver.len() >= 2,
                "skorohod-stieltjes needs at least two `driver` knots",
            )?;
        }
        SecondOrder => {
            require(sc.set.is_some(), "second-order needs a `set` or `operator`")?;
            require(sc.x0.is_some(), "second-order needs `x0`")?;
            require(sc.u0.is_some(), "second-order needs `u0`")?;
            require(sc.coupling.is_some(), "second-order needs a `coupling`")?;
        }
        StateDependent => {
            require(
                matches!(sc.set, Some(SetSpec::StateInterval { .. })),
                "state-dependent needs `set state-interval <halfwidth>`",
            )?;
            require(sc.x0.is_some(), "state-dependent needs `x0`")?;
            require(sc.u0.is_some(), "state-dependent needs `u0`")?;
            require(sc.coupling.is_some(), "state-dependent needs a `coupling`")?;
            require(sc.gamma_bump.is_some(), "state-dependent needs `gamma`")?;
        }
        FractionalBvp => {
            require(
                sc.fractional.is_some(),
                "fractional-bvp needs `fractional` parameters",
            )?;
            require(sc.zeta.is_some(), "fractional-bvp needs a `zeta` preset")?;
        }
        FractionalCoupled => {
            require(
                sc.set.is_some(),
                "fractional-coupled needs a `set` or `operator`",
            )?;
            require(
                sc.fractional.is_some(),
                "fractional-coupled needs `fractional` parameters",
            )?;
            require(sc.u0.is_some(), "fractional-coupled needs `u0`")?;
            require(
                sc.coupling.is_some(),
                "fractional-coupled needs a `coupling`",
            )?;
        }
    }
    Ok(())
}

fn push_nums(out: &mut String, nums: &[f64]) {
    for v in nums {
        let _ = write!(out, " {v}");
    }
}

/// Canonical text form; `parse_scenario(serialize(s)) == s` for valid `s`.
pub fn serialize(sc: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem {}", sc.kind.name());
    let _ = writeln!(out, "horizon {}", sc.horizon);
    for (t, v) in &sc.knots {
        let _ = writeln!(out, "knot {t} {v}");
    }
    for (t, j) in &sc.atoms {
        let _ = writeln!(out, "atom {t} {j}");
    }
    match &sc.set {
        None => {}
        Some(SetSpec::Box { lower, upper }) => {
            let mut line = String::from("set box");
            push_nums(&mut line, lower);
            push_nums(&mut line, upper);
            let _ = writeln!(out, "{line}");
        }
        Some(SetSpec::Ball { center, radius }) => {
            let mut line = String::from("set ball");
            push_nums(&mut line, center);
            let _ = writeln!(out, "{line} {radius}");
        }
        Some(SetSpec::MovingBox {
            lower,
            upper,
            velocity,
        }) => {
            let mut line = String::from("set moving-box");
            push_nums(&mut line, lower);
            push_nums(&mut line, upper);
            line.push_str(" velocity");
            push_nums(&mut line, velocity);
            let _ = writeln!(out, "{line}");
        }
        Some(SetSpec::JumpBox {
            at,
            lower1,
            upper1,
            lower2,
            upper2,
        }) => {
            let mut line = format!("set jump-box {at}");
            push_nums(&mut line, lower1);
            push_nums(&mut line, upper1);
            push_nums(&mut line, lower2);
            push_nums(&mut line, upper2);
            let _ = writeln!(out, "{line}");
        }
        Some(SetSpec::StateInterval { halfwidth }) => {
            let _ = writeln!(out, "set state-interval {halfwidth}");
        }
        Some(SetSpec::Psd { entries, .. }) => {
            let mut line = String::from("operator psd");
            push_nums(&mut line, entries);
            let _ = writeln!(out, "{line}");
        }
    }
    for (name, vec) in [("u0", &sc.u0), ("x0", &sc.x0), ("y0", &sc.y0)] {
        if let Some(v) = vec {
            let mut line = String::from(name);
            push_nums(&mut line, v);
            let _ = writeln!(out, "{line}");
        }
    }
    match &sc.forcing {
        None => {}
        Some(ForcingSpec::Constant(v)) => {
            let mut line = String::from("forcing constant");
            push_nums(&mut line, v);
            let _ = writeln!(out, "{line}");
        }
        Some(ForcingSpec::Linear { a, b }) => {
            let mut line = format!("forcing linear {a}");
            push_nums(&mut line, b);
            let _ = writeln!(out, "{line}");
        }
    }
    match &sc.set_forcing {
        None => {}
        Some(SetForcingSpec::BallMinNorm { radius }) => {
            let _ = writeln!(out, "forcing ball-min-norm {radius}");
        }
        Some(SetForcingSpec::BoxMinNorm { lower, upper }) => {
            let mut line = String::from("forcing box-min-norm");
            push_nums(&mut line, lower);
            push_nums(&mut line, upper);
            let _ = writeln!(out, "{line}");
        }
    }
    match &sc.coupling {
        None => {}
        Some(CouplingSpec::Constant(v)) => {
            let mut line = String::from("coupling constant");
            push_nums(&mut line, v);
            let _ = writeln!(out, "{line}");
        }
        Some(CouplingSpec::LinearX(a)) => {
            let _ = writeln!(out, "coupling linear-x {a}");
        }
        Some(CouplingSpec::LinearU(a)) => {
            let _ = writeln!(out, "coupling linear-u {a}");
        }
    }
    for (t, v) in &sc.driver {
        let mut line = format!("driver {t}");
        push_nums(&mut line, v);
        let _ = writeln!(out, "{line}");
    }
    if let Some(f) = &sc.fractional {
        let _ = writeln!(
            out,
            "fractional alpha={} gamma={} kappa={} beta={}",
            f.alpha, f.gamma, f.kappa, f.beta
        );
    }
    if let Some(g) = sc.gamma_bump {
        let _ = writeln!(out, "gamma {g}");
    }
    if let Some(b) = sc.bound {
        let _ = writeln!(out, "bound {b}");
    }
    match &sc.zeta {
        None => {}
        Some(ZetaSpec::Constant(c)) => {
            let _ = writeln!(out, "zeta constant {c}");
        }
        Some(ZetaSpec::Linear { a, b }) => {
            let _ = writeln!(out, "zeta linear {a} {b}");
        }
    }
    let _ = writeln!(out, "tol {}", sc.tol);
    let _ = writeln!(out, "eps0 {}", sc.eps0);
    let _ = writeln!(out, "factor {}", sc.factor);
    let _ = writeln!(out, "max-iters {}", sc.max_iters);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sweeping_gets_defaults() {
        let sc = parse_scenario("problem sweeping\nset box -1 1\nu0 0\n").unwrap();
        assert_eq!(sc.tol, 1e-6);
        assert_eq!(sc.eps0, 1e-2);
        assert_eq!(sc.factor, 0.5);
        assert_eq!(sc.horizon, 1.0);
    }

    #[test]
    fn atom_line_lands_in_the_variation() {
        let sc = parse_scenario("problem sweeping\nset box 0 1\nu0 0.5\natom 0.5 2.0\n").unwrap();
        assert_eq!(sc.atoms, vec![(0.5, 2.0)]);
    }

    #[test]
    fn duplicate_directive_names_the_line() {
        let err = parse_scenario("problem sweeping\nset box -1 1\nset box -2 2\nu0 0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn unknown_directive_names_the_line() {
        let err = parse_scenario("problem sweeping\nwobble 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn missing_fields_are_reported_by_name() {
        let err = parse_scenario("problem lipschitz\nset box -1 1\nu0 0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("forcing"), "{err}");
    }

    #[test]
    fn round_trip_covers_every_block() {
        let text = "problem skorohod-stieltjes\nhorizon 1\nknot 0 0\nknot 1 0.5\n\
                    atom 0.25 0.125\nset box 0 5\ny0 0.5\nforcing linear -0.5 0.25\n\
                    driver 0 0\ndriver 0.5 1\ndriver 1 0.5\nbound 1.5\ntol 0.0001\n";
        let sc = parse_scenario(text).unwrap();
        let back = parse_scenario(&serialize(&sc)).unwrap();
        assert_eq!(sc, back);
    }
}
