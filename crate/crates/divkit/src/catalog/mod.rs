//! Named divergence families.
//!
//! Every family exposes its value `D(p||q)` and the gradient with respect to
//! `q` in closed form. Parameters within [`crate::LIMIT_TOL`] of a removable
//! singularity are routed to the limiting family; the remaining singular
//! values are rejected.
//!
//! | group | families |
//! |---|---|
//! | entropy | `kl`, `kl_dual`, `kl_sym`, `ikl`, `havrda_charvat`, `sharma_mittal`, `renyi_ext`, `arimoto*`, `jensen_*` |
//! | power | `alpha`, `alpha_dual`, `beta`, `beta_dual`, `jensen_power`, `ab`, `ab_dual`, `eqm`, `itakura_saito` |
//! | classic | chi-square, `rukhin`, `hellinger`, `triangular`, `toussaint`, `henze_penrose`, `polya*`, Bose-Einstein, Fermi-Dirac, `bathia_singh` |
//! | means | `m_sa` .. `m_ah` and their log forms `lm_*` |
//! | mixed | `f_div`, `g_div`, `t_sym`, `fg`, `dragomir_*`, `taneja3*` |

mod classic;
mod entropy;
mod means;
mod mixed;
mod power;

use crate::error::{Error, Result};
use crate::field::{check_same_len, require, Positivity};
use crate::LIMIT_TOL;

macro_rules! families {
    ($($v:ident => $id:literal),* $(,)?) => {
        /// Identifier of a divergence family.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Family { $($v),* }

        impl Family {
            pub const ALL: &'static [Family] = &[$(Family::$v),*];

            pub fn id(self) -> &'static str {
                match self { $(Family::$v => $id),* }
            }

            pub fn from_id(s: &str) -> Result<Family> {
                match s {
                    $($id => Ok(Family::$v),)*
                    _ => Err(Error::param("family", format!("unknown family '{s}'"))),
                }
            }
        }
    };
}

families! {
    Kl => "kl", KlDual => "kl_dual", KlSym => "kl_sym", Ikl => "ikl",
    HavrdaCharvat => "havrda_charvat", SharmaMittal => "sharma_mittal", RenyiExt => "renyi_ext",
    Arimoto => "arimoto", ArimotoW => "arimoto_w", ArimotoExt => "arimoto_ext",
    JensenShannonW => "jensen_shannon_w", JensenHc => "jensen_hc", JensenHcGeo => "jensen_hc_geo",
    JensenRenyi => "jensen_renyi", JensenRenyiGeo => "jensen_renyi_geo",
    Alpha => "alpha", AlphaDual => "alpha_dual", Beta => "beta", BetaDual => "beta_dual",
    JensenPower => "jensen_power", Ab => "ab", AbDual => "ab_dual", Eqm => "eqm", ItakuraSaito => "itakura_saito",
    NeymanChi2 => "neyman_chi2", PearsonChi2 => "pearson_chi2", Rukhin => "rukhin", Hellinger => "hellinger",
    Triangular => "triangular", Toussaint => "toussaint", HenzePenrose => "henze_penrose",
    Polya => "polya", PolyaDual => "polya_dual", PolyaBregman => "polya_bregman",
    BoseEinstein1 => "bose_einstein1", BoseEinstein2 => "bose_einstein2",
    FermiDirac1 => "fermi_dirac1", FermiDirac2 => "fermi_dirac2", BathiaSingh => "bathia_singh",
    MSa => "m_sa", MSg => "m_sg", MSh => "m_sh", MAg => "m_ag", MAh => "m_ah",
    LmSa => "lm_sa", LmSg => "lm_sg", LmSh => "lm_sh", LmAg => "lm_ag", LmAh => "lm_ah",
    FDiv => "f_div", GDiv => "g_div", TSym => "t_sym", Fg => "fg",
    DragomirJd => "dragomir_jd", DragomirJdD => "dragomir_jd_d",
    Taneja3 => "taneja3", Taneja3Hg => "taneja3_hg", Taneja3Ha => "taneja3_ha",
    Taneja3Hq => "taneja3_hq", Taneja3Gq => "taneja3_gq", Taneja3Aq => "taneja3_aq",
}

/// How a family is built from a convex generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constructor {
    Csiszar,
    Bregman,
    Jensen,
    /// Log-ratio or power-of-sums forms that are not a single constructor.
    Other,
}

/// Admissible range of one parameter.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub default: Option<f64>,
    /// Interval used when the test suites draw random parameters.
    pub sample: (f64, f64),
    /// Values rejected as singular (within `LIMIT_TOL`).
    pub singular: &'static [f64],
}

const fn ps(name: &'static str, lo: f64, hi: f64, sample: (f64, f64), singular: &'static [f64]) -> ParamSpec {
    ParamSpec { name, lo, hi, lo_closed: false, hi_closed: false, default: None, sample, singular }
}

const fn closed(mut s: ParamSpec) -> ParamSpec {
    s.lo_closed = true;
    s.hi_closed = true;
    s
}

const fn lo_closed(mut s: ParamSpec) -> ParamSpec {
    s.lo_closed = true;
    s
}

const fn dflt(mut s: ParamSpec, v: f64) -> ParamSpec {
    s.default = Some(v);
    s
}

const INF: f64 = f64::INFINITY;

macro_rules! pl {
    ($($e:expr),* $(,)?) => {{
        const P: &[ParamSpec] = &[$($e),*];
        P
    }};
}
const WEIGHT: ParamSpec = ps("alpha", 0.0, 1.0, (0.2, 0.8), &[]);
const WEIGHT_B: ParamSpec = ps("beta", 0.0, 1.0, (0.2, 0.8), &[]);

/// Static description of a family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyMeta {
    pub constructor: Constructor,
    pub params: &'static [ParamSpec],
    pub symmetric: bool,
    /// Diagnostic entries may be negative and are excluded from solver use.
    pub diagnostic: bool,
    pub p_class: Positivity,
}

const fn meta(constructor: Constructor, params: &'static [ParamSpec]) -> FamilyMeta {
    FamilyMeta { constructor, params, symmetric: false, diagnostic: false, p_class: Positivity::Positive }
}

const fn sym(mut m: FamilyMeta) -> FamilyMeta {
    m.symmetric = true;
    m
}

const fn p_nonneg(mut m: FamilyMeta) -> FamilyMeta {
    m.p_class = Positivity::NonNegative;
    m
}

const fn diag(mut m: FamilyMeta) -> FamilyMeta {
    m.diagnostic = true;
    m
}

use Constructor::*;

impl Family {
    pub fn meta(self) -> FamilyMeta {
        use Family::*;
        const LAMBDA: ParamSpec = ps("lambda", -INF, INF, (-0.8, 2.6), &[]);
        const HC_A: ParamSpec = ps("alpha", -INF, INF, (-0.8, 2.6), &[]);
        const TANEJA: &[ParamSpec] =
            &[ps("r", -INF, INF, (-0.5, 2.5), &[1.0]), ps("s", -INF, INF, (-0.5, 2.5), &[]), dflt(WEIGHT_B, 0.5)];
        const MEAN_W: &[ParamSpec] = &[dflt(WEIGHT, 0.5)];
        match self {
            Kl => p_nonneg(meta(Csiszar, pl![])),
            KlDual => meta(Csiszar, pl![]),
            KlSym => sym(meta(Csiszar, pl![])),
            Ikl => p_nonneg(diag(meta(Other, pl![]))),
            HavrdaCharvat => meta(Csiszar, pl![HC_A]),
            SharmaMittal => meta(Other, pl![lo_closed(ps("alpha", 0.0, INF, (0.2, 2.6), &[1.0])), ps("s", -INF, INF, (-0.5, 2.5), &[])]),
            RenyiExt => meta(Other, pl![ps("alpha", -INF, INF, (-0.5, 2.5), &[])]),
            Arimoto => sym(meta(Other, pl![ps("delta", -INF, INF, (-1.0, 3.0), &[])])),
            ArimotoW => meta(Other, pl![ps("delta", -INF, INF, (-1.0, 3.0), &[]), dflt(WEIGHT, 0.5)]),
            ArimotoExt => meta(
                Other,
                pl![ps("delta", -INF, INF, (1.3, 3.0), &[1.0]), ps("gamma", -INF, INF, (-0.5, 0.9), &[]), dflt(WEIGHT, 0.5)],
            ),
            JensenShannonW => meta(Jensen, pl![dflt(WEIGHT_B, 0.5)]),
            JensenHc => meta(Jensen, pl![ps("alpha", -INF, INF, (-0.8, 2.6), &[]), dflt(WEIGHT_B, 0.5)]),
            JensenHcGeo => meta(Other, pl![ps("alpha", 1.0, INF, (1.2, 3.0), &[1.0]), dflt(WEIGHT_B, 0.5)]),
            JensenRenyi => meta(Other, pl![lo_closed(ps("alpha", 0.0, 1.0, (0.1, 0.9), &[1.0])), dflt(WEIGHT_B, 0.5)]),
            JensenRenyiGeo => meta(Other, pl![ps("alpha", 1.0, INF, (1.2, 3.0), &[1.0]), dflt(WEIGHT_B, 0.5)]),
            Alpha => meta(Csiszar, pl![LAMBDA]),
            AlphaDual => meta(Csiszar, pl![LAMBDA]),
            Beta => meta(Bregman, pl![LAMBDA]),
            BetaDual => meta(Bregman, pl![LAMBDA]),
            JensenPower => meta(Jensen, pl![LAMBDA, dflt(WEIGHT, 0.5)]),
            Ab | AbDual => meta(Other, pl![ps("a", -INF, INF, (0.3, 2.0), &[0.0]), ps("b", -INF, INF, (0.3, 2.0), &[1.0])]),
            Eqm => p_nonneg(sym(meta(Bregman, pl![]))),
            ItakuraSaito => meta(Bregman, pl![]),
            NeymanChi2 => p_nonneg(meta(Csiszar, pl![])),
            PearsonChi2 => meta(Csiszar, pl![]),
            Rukhin => meta(Csiszar, pl![closed(ps("alpha", 0.0, 1.0, (0.0, 1.0), &[]))]),
            Hellinger => p_nonneg(sym(meta(Csiszar, pl![]))),
            Triangular => p_nonneg(sym(meta(Csiszar, pl![]))),
            Toussaint => p_nonneg(sym(meta(Csiszar, pl![]))),
            HenzePenrose => meta(Csiszar, pl![dflt(WEIGHT_B, 0.5)]),
            Polya | PolyaDual => meta(Csiszar, pl![ps("gamma", 0.0, INF, (0.2, 3.0), &[0.0])]),
            PolyaBregman => diag(meta(Bregman, pl![ps("gamma", 0.0, INF, (0.2, 3.0), &[0.0])])),
            BoseEinstein1 | BoseEinstein2 => {
                meta(Other, pl![ps("alpha", 0.0, INF, (0.2, 3.0), &[]), closed(ps("d", 0.0, 1.0, (0.0, 1.0), &[]))])
            }
            FermiDirac1 | FermiDirac2 => {
                meta(Other, pl![ps("beta", 1.0, INF, (1.5, 4.0), &[1.0]), closed(ps("d", 0.0, 1.0, (0.0, 1.0), &[]))])
            }
            BathiaSingh => meta(Csiszar, pl![lo_closed(ps("alpha", 0.0, 1.0, (0.1, 0.9), &[]))]),
            MSa | MSg | MSh | MAh | LmSa | LmSg | LmSh | LmAh => meta(Other, MEAN_W),
            MAg | LmAg => meta(Other, pl![dflt(closed(ps("alpha", 0.0, 1.0, (0.2, 0.8), &[0.0])), 0.5)]),
            FDiv | GDiv => meta(Other, pl![lo_closed(ps("alpha", 0.0, 1.0, (0.0, 0.8), &[]))]),
            TSym => sym(meta(Other, pl![ps("alpha", 0.0, 1.0, (0.1, 0.9), &[])])),
            Fg => meta(Other, pl![ps("s", -INF, INF, (-0.5, 2.5), &[]), lo_closed(ps("alpha", 0.0, 1.0, (0.0, 0.8), &[]))]),
            DragomirJd => meta(Other, pl![lo_closed(ps("alpha", 0.0, 1.0, (0.0, 0.8), &[]))]),
            DragomirJdD => meta(Other, pl![lo_closed(ps("alpha", 0.0, 1.0, (0.0, 0.8), &[])), ps("d", -INF, INF, (-0.5, 2.5), &[])]),
            Taneja3 | Taneja3Hg | Taneja3Ha | Taneja3Hq | Taneja3Gq | Taneja3Aq => meta(Other, TANEJA),
        }
    }
}

/// Parameter record. Unused fields stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Params {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub s: Option<f64>,
    pub d: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub r: Option<f64>,
}

impl Params {
    pub const NAMES: [&'static str; 10] = ["lambda", "alpha", "beta", "s", "d", "delta", "gamma", "a", "b", "r"];

    fn slot(&mut self, name: &str) -> Result<&mut Option<f64>> {
        Ok(match canonical(name)? {
            "lambda" => &mut self.lambda,
            "alpha" => &mut self.alpha,
            "beta" => &mut self.beta,
            "s" => &mut self.s,
            "d" => &mut self.d,
            "delta" => &mut self.delta,
            "gamma" => &mut self.gamma,
            "a" => &mut self.a,
            "b" => &mut self.b,
            _ => &mut self.r,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut c = *self;
        c.slot(name).ok().and_then(|s| *s)
    }

    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        *self.slot(name)? = Some(v);
        Ok(())
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.set(name, v).expect("known parameter name");
        self
    }
}

fn canonical(name: &str) -> Result<&'static str> {
    Ok(match name {
        "lambda" | "λ" | "l" => "lambda",
        "alpha" | "α" => "alpha",
        "beta" | "β" => "beta",
        "s" => "s",
        "d" => "d",
        "delta" | "δ" => "delta",
        "gamma" | "γ" => "gamma",
        "a" => "a",
        "b" => "b",
        "r" => "r",
        _ => return Err(Error::param(name, "unknown parameter name")),
    })
}

pub(crate) fn near(x: f64, v: f64) -> bool {
    (x - v).abs() < LIMIT_TOL
}

/// A family with validated, fully resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSpec {
    pub family: Family,
    pub params: Params,
}

impl DivergenceSpec {
    /// Validate `params` against the family's ranges, filling defaults.
    pub fn new(family: Family, params: Params) -> Result<Self> {
        let m = family.meta();
        let mut resolved = Params::default();
        for name in Params::NAMES {
            if params.get(name).is_some() && !m.params.iter().any(|s| s.name == name) {
                return Err(Error::param(name, format!("not a parameter of {}", family.id())));
            }
        }
        for spec in m.params {
            let v = match params.get(spec.name).or(spec.default) {
                Some(v) => v,
                None => {
                    return Err(Error::param(spec.name, format!("required by {}, admissible {}", family.id(), spec.range_text())))
                }
            };
            if !v.is_finite() {
                return Err(Error::param(spec.name, format!("{v} is not finite, admissible {}", spec.range_text())));
            }
            let lo_ok = if spec.lo_closed { v >= spec.lo } else { v > spec.lo };
            let hi_ok = if spec.hi_closed { v <= spec.hi } else { v < spec.hi };
            if !lo_ok || !hi_ok {
                return Err(Error::param(spec.name, format!("{v} outside {}", spec.range_text())));
            }
            if let Some(&z) = spec.singular.iter().find(|&&z| near(v, z)) {
                return Err(Error::param(spec.name, format!("{v} is at the singular value {z}, admissible {}", spec.range_text())));
            }
            resolved.set(spec.name, v)?;
        }
        let s = DivergenceSpec { family, params: resolved };
        s.validate_combination()?;
        Ok(s)
    }

    pub fn simple(family: Family) -> Result<Self> {
        Self::new(family, Params::default())
    }

    pub fn parse(family: &str, kv: &[(String, f64)]) -> Result<Self> {
        let mut p = Params::default();
        for (k, v) in kv {
            p.set(k, *v)?;
        }
        Self::new(Family::from_id(family)?, p)
    }

    fn validate_combination(&self) -> Result<()> {
        use Family::*;
        match self.family {
            Ab | AbDual => {
                let (a, b) = (self.p("a"), self.p("b"));
                if near(a + b - 1.0, 0.0) {
                    return Err(Error::param("a+b", "a + b - 1 = 0 is singular"));
                }
            }
            ArimotoExt => {
                let (d, g) = (self.p("delta"), self.p("gamma"));
                if (d - g) * (d - 1.0) <= 0.0 || near(d, g) {
                    return Err(Error::param("gamma", format!("need (delta - gamma)/(delta - 1) > 0, got delta={d}, gamma={g}")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolved parameter value; panics if the family does not define it.
    pub fn p(&self, name: &str) -> f64 {
        self.params.get(name).unwrap_or_else(|| panic!("{} has no parameter {name}", self.family.id()))
    }

    pub fn id(&self) -> &'static str {
        self.family.id()
    }

    fn check_fields(&self, p: &[f64], q: &[f64]) -> Result<()> {
        check_same_len(p, q)?;
        require(p, self.family.meta().p_class, "p")?;
        require(q, Positivity::Positive, "q")?;
        match self.family {
            Family::FermiDirac1 => {
                let b = self.p("beta");
                if let Some(i) = (0..p.len()).find(|&i| b * q[i] <= p[i]) {
                    return Err(Error::domain(i, format!("need beta*q > p, got p={}, q={}", p[i], q[i])));
                }
            }
            Family::FermiDirac2 => {
                let b = self.p("beta");
                if let Some(i) = (0..p.len()).find(|&i| p[i] >= b || q[i] >= b) {
                    return Err(Error::domain(i, format!("need p, q < beta = {b}")));
                }
            }
            Family::SharmaMittal | Family::RenyiExt => {
                let a = self.p("alpha");
                let m = a * crate::field::sum(p) + (1.0 - a) * crate::field::sum(q);
                if m <= 0.0 && !near(a, 0.0) && !near(a, 1.0) {
                    return Err(Error::Domain { index: None, msg: format!("need alpha sum p + (1 - alpha) sum q > 0, got {m}") });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `D(p || q)`. Standard families return exactly 0 when `p == q`.
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check_fields(p, q)?;
        if p == q && !self.family.meta().diagnostic {
            return Ok(0.0);
        }
        let v = self.value_unchecked(p, q);
        if v.is_nan() {
            return Err(Error::Domain { index: None, msg: format!("{} evaluated to NaN", self.id()) });
        }
        Ok(v)
    }

    /// Gradient of `D(p || q)` with respect to `q`.
    pub fn gradient_q(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.check_fields(p, q)?;
        let g = self.grad_unchecked(p, q);
        if let Some(i) = g.iter().position(|x| x.is_nan()) {
            return Err(Error::domain(i, format!("{} gradient is NaN", self.id())));
        }
        Ok(g)
    }

    pub(crate) fn value_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        use Family::*;
        match self.family {
            Kl | KlDual | KlSym | Ikl | HavrdaCharvat | SharmaMittal | RenyiExt | Arimoto | ArimotoW | ArimotoExt
            | JensenShannonW | JensenHc | JensenHcGeo | JensenRenyi | JensenRenyiGeo => entropy::value(self, p, q),
            Alpha | AlphaDual | Beta | BetaDual | JensenPower | Ab | AbDual | Eqm | ItakuraSaito => power::value(self, p, q),
            NeymanChi2 | PearsonChi2 | Rukhin | Hellinger | Triangular | Toussaint | HenzePenrose | Polya | PolyaDual
            | PolyaBregman | BoseEinstein1 | BoseEinstein2 | FermiDirac1 | FermiDirac2 | BathiaSingh => {
                classic::value(self, p, q)
            }
            MSa | MSg | MSh | MAg | MAh | LmSa | LmSg | LmSh | LmAg | LmAh => means::value(self, p, q),
            _ => mixed::value(self, p, q),
        }
    }

    pub(crate) fn grad_unchecked(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        use Family::*;
        match self.family {
            Kl | KlDual | KlSym | Ikl | HavrdaCharvat | SharmaMittal | RenyiExt | Arimoto | ArimotoW | ArimotoExt
            | JensenShannonW | JensenHc | JensenHcGeo | JensenRenyi | JensenRenyiGeo => entropy::grad(self, p, q),
            Alpha | AlphaDual | Beta | BetaDual | JensenPower | Ab | AbDual | Eqm | ItakuraSaito => power::grad(self, p, q),
            NeymanChi2 | PearsonChi2 | Rukhin | Hellinger | Triangular | Toussaint | HenzePenrose | Polya | PolyaDual
            | PolyaBregman | BoseEinstein1 | BoseEinstein2 | FermiDirac1 | FermiDirac2 | BathiaSingh => {
                classic::grad(self, p, q)
            }
            MSa | MSg | MSh | MAg | MAh | LmSa | LmSg | LmSh | LmAg | LmAh => means::grad(self, p, q),
            _ => mixed::grad(self, p, q),
        }
    }

    /// Split of the `q`-gradient into `pos - neg` with both parts non-negative,
    /// when the family has a natural one.
    pub fn gradient_split(&self, p: &[f64], q: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
        self.check_fields(p, q)?;
        let f = match split_fn(self) {
            Some(f) => f,
            None => return Ok(None),
        };
        let (pos, neg): (Vec<f64>, Vec<f64>) = p.iter().zip(q).map(|(&a, &b)| f(a, b)).unzip();
        Ok(Some((pos, neg)))
    }

    /// Equivalent simpler family and the constant `c` with `self = c * other`.
    pub fn reduce_special_case(&self) -> Option<(DivergenceSpec, f64)> {
        use Family::*;
        let mk = |f: Family, pr: Params| DivergenceSpec::new(f, pr).ok();
        let none = Params::default();
        let r = match self.family {
            Ab | AbDual => {
                let (a, b) = (self.p("a"), self.p("b"));
                let (be, al) = if self.family == Ab { (Beta, Alpha) } else { (BetaDual, AlphaDual) };
                if near(a, 1.0) {
                    mk(be, none.with("lambda", b)).map(|s| (s, 1.0))
                } else if near(a + b - 1.0, 1.0) {
                    mk(al, none.with("lambda", a)).map(|s| (s, 1.0))
                } else {
                    None
                }
            }
            HavrdaCharvat | Alpha => {
                let l = self.params.lambda.or(self.params.alpha).unwrap();
                if near(l, 1.0) {
                    mk(Kl, none).map(|s| (s, 1.0))
                } else if near(l, 0.0) {
                    mk(KlDual, none).map(|s| (s, 1.0))
                } else if near(l, 0.5) {
                    mk(Hellinger, none).map(|s| (s, 2.0))
                } else if self.family == HavrdaCharvat {
                    mk(Alpha, none.with("lambda", l)).map(|s| (s, 1.0))
                } else {
                    None
                }
            }
            AlphaDual => mk(Alpha, none.with("lambda", 1.0 - self.p("lambda"))).map(|s| (s, 1.0)),
            Beta => {
                let l = self.p("lambda");
                if near(l, 2.0) {
                    mk(Eqm, none).map(|s| (s, 0.5))
                } else if near(l, 1.0) {
                    mk(Kl, none).map(|s| (s, 1.0))
                } else if near(l, 0.0) {
                    mk(ItakuraSaito, none).map(|s| (s, 1.0))
                } else {
                    None
                }
            }
            BetaDual if near(self.p("lambda"), 1.0) => mk(KlDual, none).map(|s| (s, 1.0)),
            JensenPower => {
                mk(JensenHc, none.with("alpha", self.p("lambda")).with("beta", self.p("alpha"))).map(|s| (s, 1.0))
            }
            SharmaMittal if near(self.p("s"), self.p("alpha")) => {
                mk(HavrdaCharvat, none.with("alpha", self.p("alpha"))).map(|s| (s, 1.0))
            }
            SharmaMittal if near(self.p("s"), 1.0) => mk(RenyiExt, none.with("alpha", self.p("alpha"))).map(|s| (s, 1.0)),
            Rukhin => {
                let a = self.p("alpha");
                if near(a, 1.0) {
                    mk(NeymanChi2, none).map(|s| (s, 1.0))
                } else if near(a, 0.0) {
                    mk(PearsonChi2, none).map(|s| (s, 1.0))
                } else if near(a, 0.5) {
                    mk(Triangular, none).map(|s| (s, 2.0))
                } else {
                    None
                }
            }
            Toussaint => mk(Triangular, none).map(|s| (s, 0.5)),
            Arimoto => {
                if near(self.p("delta"), 1.0) {
                    mk(JensenShannonW, none.with("beta", 0.5)).map(|s| (s, 1.0))
                } else {
                    mk(ArimotoW, none.with("delta", self.p("delta")).with("alpha", 0.5)).map(|s| (s, 0.5))
                }
            }
            ArimotoW if near(self.p("delta"), 1.0) => {
                let a = self.p("alpha");
                mk(JensenShannonW, none.with("beta", a)).map(|s| (s, 1.0 / (1.0 - a)))
            }
            JensenHc if near(self.p("alpha"), 1.0) => mk(JensenShannonW, none.with("beta", self.p("beta"))).map(|s| (s, 1.0)),
            Fg if near(self.p("s"), 1.0) => mk(GDiv, none.with("alpha", self.p("alpha"))).map(|s| (s, 1.0)),
            Fg if near(self.p("s"), 0.0) => mk(FDiv, none.with("alpha", self.p("alpha"))).map(|s| (s, 1.0)),
            DragomirJdD if near(self.p("d"), 1.0) => mk(DragomirJd, none.with("alpha", self.p("alpha"))).map(|s| (s, 1.0)),
            BathiaSingh if near(self.p("alpha"), 0.0) => mk(Kl, none).map(|s| (s, 1.0)),
            MAg => {
                let a = self.p("alpha");
                if near(a, 1.0) {
                    mk(Kl, none).map(|s| (s, 1.0))
                } else {
                    mk(Alpha, none.with("lambda", a)).map(|s| (s, a))
                }
            }
            _ => None,
        };
        r.filter(|(s, _)| s != self)
    }
}

type SplitFn = Box<dyn Fn(f64, f64) -> (f64, f64)>;

fn split_fn(spec: &DivergenceSpec) -> Option<SplitFn> {
    use Family::*;
    let ord = |c: f64, a: f64, b: f64| if c >= 0.0 { (c * a, c * b) } else { (-c * b, -c * a) };
    Some(match spec.family {
        Kl => Box::new(|p, q| (1.0, p / q)),
        Ikl => Box::new(|p, q| (0.0, p / q)),
        Alpha | HavrdaCharvat => {
            let l = spec.params.lambda.or(spec.params.alpha).unwrap();
            if near(l, 0.0) {
                return None;
            }
            Box::new(move |p, q| ord(1.0 / l, 1.0, (p / q).powf(l)))
        }
        AlphaDual => {
            let l = spec.p("lambda");
            if near(l, 1.0) {
                return None;
            }
            Box::new(move |p, q| ord(1.0 / (l - 1.0), (p / q).powf(1.0 - l), 1.0))
        }
        Beta => {
            let l = spec.p("lambda");
            Box::new(move |p, q| (q.powf(l - 1.0), p * q.powf(l - 2.0)))
        }
        BetaDual => {
            let l = spec.p("lambda");
            if near(l, 1.0) {
                return None;
            }
            Box::new(move |p, q| ord(1.0 / (l - 1.0), q.powf(l - 1.0), p.powf(l - 1.0)))
        }
        Ab => {
            let (a, b) = (spec.p("a"), spec.p("b"));
            Box::new(move |p, q| ord(1.0 / a, q.powf(a + b - 2.0), p.powf(a) * q.powf(b - 2.0)))
        }
        AbDual => {
            let (a, b) = (spec.p("a"), spec.p("b"));
            Box::new(move |p, q| ord(1.0 / (b - 1.0), q.powf(a + b - 2.0), q.powf(a - 1.0) * p.powf(b - 1.0)))
        }
        Eqm => Box::new(|p, q| (2.0 * q, 2.0 * p)),
        ItakuraSaito => Box::new(|p, q| (1.0 / q, p / (q * q))),
        NeymanChi2 => Box::new(|p, q| (1.0, p * p / (q * q))),
        PearsonChi2 => Box::new(|p, q| (2.0 * q / p, 2.0)),
        Hellinger => Box::new(|p, q| (1.0, (p / q).sqrt())),
        Triangular => Box::new(|p, q| (1.0, 4.0 * p * p / ((p + q) * (p + q)))),
        Toussaint => Box::new(|p, q| (0.5, 2.0 * p * p / ((p + q) * (p + q)))),
        MAg => {
            let a = spec.p("alpha");
            if near(a, 1.0) {
                return None;
            }
            Box::new(move |p, q| (1.0, (p / q).powf(a)))
        }
        _ => return None,
    })
}

/// Ghosh-type divergence `1/(A(A+B)) sum [q^(A+B) + (A/B) p^(A+B) - ((A+B)/B) p^A q^B]`.
pub fn ghosh(a: f64, b: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    check_same_len(p, q)?;
    require(p, Positivity::Positive, "p")?;
    require(q, Positivity::Positive, "q")?;
    if a <= 0.0 || near(a, 0.0) {
        return Err(Error::param("A", format!("{a} outside (0, inf)")));
    }
    if near(b, 0.0) || near(a + b, 0.0) {
        return Err(Error::param("B", "B and A + B must be non-zero"));
    }
    let l = a + b;
    let s: f64 = p.iter().zip(q).map(|(&x, &y)| y.powf(l) + (a / b) * x.powf(l) - (l / b) * x.powf(a) * y.powf(b)).sum();
    Ok(s / (a * l))
}

/// `|GH(A, B) - AB(A, B + 1)|` on the given fields.
pub fn ghosh_conformance(a: f64, b: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    let ab = DivergenceSpec::new(Family::Ab, Params::default().with("a", a).with("b", b + 1.0))?;
    Ok((ghosh(a, b, p, q)? - ab.evaluate(p, q)?).abs())
}

/// Symmetric Gamma divergence `1/(l-1) ln(sum p^l sum q^l / (sum p q^(l-1) sum q p^(l-1)))`.
pub fn gamma_symmetric(l: f64, p: &[f64], q: &[f64]) -> Result<f64> {
    check_same_len(p, q)?;
    require(p, Positivity::Positive, "p")?;
    require(q, Positivity::Positive, "q")?;
    if near(l, 1.0) {
        return Err(Error::param("lambda", "1 is singular"));
    }
    let sp: f64 = p.iter().map(|x| x.powf(l)).sum();
    let sq: f64 = q.iter().map(|x| x.powf(l)).sum();
    let spq: f64 = p.iter().zip(q).map(|(&x, &y)| x * y.powf(l - 1.0)).sum();
    let sqp: f64 = p.iter().zip(q).map(|(&x, &y)| y * x.powf(l - 1.0)).sum();
    Ok((sp * sq / (spq * sqp)).ln() / (l - 1.0))
}

impl ParamSpec {
    /// Interval notation, e.g. `(0, 1]`, followed by any singular values.
    pub fn range_text(&self) -> String {
        let mut t = format!(
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_bound(self.lo),
            fmt_bound(self.hi),
            if self.hi_closed { ']' } else { ')' }
        );
        for z in self.singular {
            t.push_str(&format!(" !={z}"));
        }
        t
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.to_string()
    }
}

/// Family registry as a delimited table with a header row:
/// `family, constructor, params, p_domain, symmetric, diagnostic`.
/// Parameters appear as `name in range [= default]`, joined by `; `.
pub fn metadata_table(delim: char) -> String {
    let mut out = ["family", "constructor", "params", "p_domain", "symmetric", "diagnostic"].join(&delim.to_string());
    out.push('\n');
    for &f in Family::ALL {
        let m = f.meta();
        let params: Vec<String> = m
            .params
            .iter()
            .map(|s| match s.default {
                Some(d) => format!("{} in {} = {d}", s.name, s.range_text()),
                None => format!("{} in {}", s.name, s.range_text()),
            })
            .collect();
        let row = [
            f.id().to_string(),
            format!("{:?}", m.constructor).to_lowercase(),
            params.join("; "),
            match m.p_class {
                Positivity::Positive => "p > 0".into(),
                Positivity::NonNegative => "p >= 0".into(),
            },
            m.symmetric.to_string(),
            m.diagnostic.to_string(),
        ];
        out.push_str(&row.join(&delim.to_string()));
        out.push('\n');
    }
    out
}

/// Sum of `f(p_i, q_i)`.
pub(crate) fn sep(p: &[f64], q: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| f(a, b)).sum()
}

/// Vector of `f(p_i, q_i)`.
pub(crate) fn sepv(p: &[f64], q: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    p.iter().zip(q).map(|(&a, &b)| f(a, b)).collect()
}

pub(crate) use near as near_param;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for &f in Family::ALL {
            assert_eq!(Family::from_id(f.id()).unwrap(), f);
        }
        assert!(Family::from_id("nope").is_err());
    }

    #[test]
    fn param_validation() {
        assert!(matches!(
            DivergenceSpec::new(Family::Rukhin, Params::default().with("alpha", 1.5)),
            Err(Error::Param { .. })
        ));
        assert!(matches!(DivergenceSpec::new(Family::Alpha, Params::default()), Err(Error::Param { .. })));
        assert!(matches!(
            DivergenceSpec::new(Family::Ab, Params::default().with("a", 0.5).with("b", 0.5)),
            Err(Error::Param { .. })
        ));
        assert!(matches!(
            DivergenceSpec::new(Family::Kl, Params::default().with("lambda", 1.0)),
            Err(Error::Param { .. })
        ));
        let t = DivergenceSpec::new(Family::Taneja3, Params::default().with("r", 2.0).with("s", 0.5)).unwrap();
        assert_eq!(t.p("beta"), 0.5);
    }

    #[test]
    fn metadata_table_has_a_row_per_family() {
        let t = metadata_table('\t');
        let rows: Vec<&str> = t.lines().collect();
        assert_eq!(rows.len(), Family::ALL.len() + 1);
        assert!(rows.iter().all(|r| r.split('\t').count() == 6));
        assert!(t.contains("rukhin\tcsiszar\talpha in [0, 1]\t"));
    }

    #[test]
    fn ghosh_rejects_nonpositive_a() {
        let p = [1.0, 2.0];
        assert!(matches!(ghosh_conformance(0.0, 1.0, &p, &p), Err(Error::Param { .. })));
        assert!(matches!(ghosh_conformance(-0.5, 1.0, &p, &p), Err(Error::Param { .. })));
        assert_eq!(ghosh_conformance(1.0, 1.0, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn unicode_parameter_names() {
        let mut p = Params::default();
        p.set("λ", 2.0).unwrap();
        assert_eq!(p.lambda, Some(2.0));
        assert!(p.set("zeta", 1.0).is_err());
    }
}
