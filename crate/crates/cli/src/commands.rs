use crate::{input, Cli, Command, ExampleCmd, Format, MarketCmd, OrliczCmd, OutputArgs, SeqCmd, UtilityArgs, UtilityCmd};
use ftaplab::duality::{sup_utility_dual, sup_utility_primal, UtilityProblem};
use ftaplab::largemarket::*;
use ftaplab::market::{check_na, find_emm, in_c};
use ftaplab::orlicz::{complementary, luxemburg_norm, polar_gauge, utility_from_young, YoungFunction};
use ftaplab::report::{format_value, format_vec, AnalysisReport};
use ftaplab::{Error, Result};
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Clean = 0,
    /// Arbitrage or free lunch detected.
    Found = 1,
    Input = 2,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

pub fn run(cli: &Cli) -> Result<Exit> {
    if let Command::Example(ex) = &cli.command {
        let fam = match *ex {
            ExampleCmd::IsolatedArbitrage { alpha, prefix } => MarketFamily::isolated_arbitrage(alpha, prefix)?,
            ExampleCmd::Binomial { p, up, down, horizon, prefix } => MarketFamily::binomial(p, up, down, horizon, prefix)?,
        };
        println!("{}", fam.to_json()?);
        return Ok(Exit::Clean);
    }
    let (report, exit) = match &cli.command {
        Command::Orlicz(c) => orlicz(c)?,
        Command::Market(c) => market(c)?,
        Command::Utility(c) => utility(c)?,
        Command::Seq(c) => seq(c)?,
        Command::Example(_) => unreachable!(),
    };
    emit(&report, &cli.out)?;
    Ok(exit)
}

fn emit(report: &AnalysisReport, out: &OutputArgs) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("cannot write report: {e}"));
    match &out.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            if out.format != Format::Csv {
                std::fs::write(dir.join("report.txt"), report.to_text()).map_err(io)?;
            }
            if out.format != Format::Text {
                std::fs::write(dir.join("report.csv"), report.to_csv()).map_err(io)?;
            }
        }
        None => match out.format {
            Format::Text => print!("{}", report.to_text()),
            Format::Csv => print!("{}", report.to_csv()),
            Format::Both => print!("{}\n{}", report.to_text(), report.to_csv()),
        },
    }
    Ok(())
}

fn orlicz(cmd: &OrliczCmd) -> Result<(AnalysisReport, Exit)> {
    let mut rep = AnalysisReport::new("orlicz");
    match cmd {
        OrliczCmd::Conj { young, at } => {
            let f = input::young(young)?;
            let g = complementary(&f)?;
            rep.line(format!("F = {f}"));
            rep.line(format!("G = {g}"));
            for y in at {
                if *y < 0.0 {
                    return Err(Error::Domain(format!("evaluation point {y} is negative")));
                }
                rep.row(None, "G", g.value(*y), format!("y={}", format_value(*y)));
            }
        }
        OrliczCmd::Norm { young, f, space } => {
            let fy = input::young(young)?;
            let sp = input::space(space.probs.as_ref(), f.len())?;
            let v = luxemburg_norm(f, &sp, &fy)?;
            rep.line(format!("Luxemburg norm under {fy}: {}", format_value(v)));
            rep.row(None, "luxemburg", v, format!("F={fy}"));
        }
        OrliczCmd::Gauge { young, g, space } => {
            let fy = input::young(young)?;
            let sp = input::space(space.probs.as_ref(), g.len())?;
            let v = polar_gauge(g, &sp, &fy)?;
            let norm = luxemburg_norm(g, &sp, &complementary(&fy)?)?;
            rep.line(format!("polar gauge under {fy}: {}", format_value(v)));
            rep.line(format!("complementary norm: {} (gauge lies in [norm, 2 norm])", format_value(norm)));
            rep.row(None, "gauge", v, format!("F={fy}")).row(None, "complementary-norm", norm, "");
        }
    }
    Ok((rep, Exit::Clean))
}

fn market(cmd: &MarketCmd) -> Result<(AnalysisReport, Exit)> {
    let mut rep = AnalysisReport::new("market");
    match cmd {
        MarketCmd::Emm { market } => {
            let m = input::market(market)?;
            match find_emm(&m)? {
                Some(d) => {
                    let q = d.measure(m.space());
                    rep.line(format!("q={}", format_vec(&q)));
                    for (label, qi) in m.space().labels().iter().zip(&q) {
                        rep.row(None, "emm", *qi, label.clone());
                    }
                    Ok((rep, Exit::Clean))
                }
                None => {
                    rep.line("no equivalent martingale measure: the market admits arbitrage");
                    rep.row(None, "emm", 0.0, "none");
                    Ok((rep, Exit::Found))
                }
            }
        }
        MarketCmd::Na { market } => {
            let m = input::market(market)?;
            let v = check_na(&m)?;
            if let Some(c) = &v.certificate {
                rep.line("arbitrage found");
                rep.line(format!("strategy={}", format_vec(&c.strategy)));
                rep.line(format!("payoff={}", format_vec(&c.payoff)));
                rep.line(format!("exactly verified: {}", c.exact_verified.map_or("n/a".into(), |b| b.to_string())));
                rep.row(None, "NA", 0.0, format!("payoff={}", format_vec(&c.payoff)));
                Ok((rep, Exit::Found))
            } else {
                let q = v.emm.as_ref().map(|d| d.measure(m.space())).unwrap_or_default();
                rep.line(format!("no arbitrage; q={}", format_vec(&q)));
                rep.row(None, "NA", 1.0, format!("q={}", format_vec(&q)));
                Ok((rep, Exit::Clean))
            }
        }
        MarketCmd::InC { market, f } => {
            let m = input::market(market)?;
            let s = in_c(&m, f)?;
            rep.line(format!("member: {}", s.member));
            rep.line(format!("strategy={}", format_vec(&s.strategy)));
            rep.line(format!("shortfall={}", format_value(s.shortfall)));
            rep.row(None, "inC", if s.member { 1.0 } else { 0.0 }, format!("shortfall={}", format_value(s.shortfall)));
            Ok((rep, Exit::Clean))
        }
    }
}

fn utility(cmd: &UtilityCmd) -> Result<(AnalysisReport, Exit)> {
    let (args, dual): (&UtilityArgs, bool) = match cmd {
        UtilityCmd::Sup(a) => (a, false),
        UtilityCmd::Dual(a) => (a, true),
    };
    let m = input::market(&args.market)?;
    let f = input::young(&args.young)?;
    let w = input::claim(&m, &args.w)?;
    let r = input::density(&m, args.r.as_ref())?;
    let prob = UtilityProblem::new(m, utility_from_young(&f)?, r, w)?;
    let mut rep = AnalysisReport::new("utility");
    if dual {
        let d = sup_utility_dual(&prob)?;
        rep.line(format!("value={}", format_value(d.value)));
        rep.row(None, "dual-value", d.value, format!("F={f};gap={}", format_value(d.gap)));
        match &d.q {
            Some(q) => {
                let qm = q.measure(prob.market.space());
                rep.line(format!("Q={}", format_vec(&qm)));
                rep.line(format!("lambda={}", format_value(d.lambda)));
                rep.row(None, "lambda", d.lambda, format!("Q={}", format_vec(&qm)));
            }
            None => {
                rep.line("infimum approached as lambda -> 0, not attained");
            }
        }
    } else {
        let p = sup_utility_primal(&prob)?;
        rep.line(format!("value={}", format_value(p.value)));
        rep.line(format!("strategy={}", format_vec(&p.strategy)));
        rep.row(None, "primal-value", p.value, format!("F={f};attained={}", p.attained));
        if let Some(a) = &p.arbitrage_direction {
            rep.flag(format!("the market admits arbitrage along {}", format_vec(a)));
        }
    }
    Ok((rep, Exit::Clean))
}

fn youngs(list: &[String]) -> Result<Vec<YoungFunction>> {
    if list.is_empty() {
        Ok(default_young_grid())
    } else {
        list.iter().map(|s| input::young(s)).collect()
    }
}

fn seq(cmd: &SeqCmd) -> Result<(AnalysisReport, Exit)> {
    let mut rep = AnalysisReport::new("sequence");
    match cmd {
        SeqCmd::Contiguity { family, measures, levels } => {
            let fam = input::family(family.family.as_ref(), family.prefix)?;
            let q = match measures {
                Some(p) => input::measures(p)?,
                None => MeasureSeq::reference(&fam)?,
            };
            let prof = contiguity_profile_with(&fam, &q, fam.prefix(), &default_eps_grid(*levels), &default_kappa_grid())?;
            rep.add_profile(&prof);
            Ok((rep, Exit::Clean))
        }
        SeqCmd::Detect { family, c_scale, l_scale, alpha, enum_limit } => {
            let fam = input::family(family.family.as_ref(), family.prefix)?;
            let params = DetectParams { c_scale: *c_scale, l_scale: *l_scale, alpha: *alpha, enumeration_limit: *enum_limit };
            let verdicts = detect_all(&fam, &params)?;
            rep.add_verdicts(&verdicts);
            let found = verdicts.iter().any(|v| v.status == Status::Found);
            if fam.arbitrage_event().is_some() {
                rep.flag("the family admits one-period arbitrage and violates the standing no-arbitrage assumption");
            }
            Ok((rep, if found { Exit::Found } else { Exit::Clean }))
        }
        SeqCmd::Namfl { family, eps, young, delta, beliefs } => {
            let fam = input::family(family.family.as_ref(), family.prefix)?;
            let b = beliefs.as_ref().map(|p| input::measures(p)).transpose()?;
            let mut signal = false;
            for f in youngs(young)? {
                let table = namfl_table(&fam, b.as_ref(), *eps, &f)?;
                signal |= table.iter().any(|w| w.value >= -delta);
                rep.add_namfl_table(*eps, &f, &table);
            }
            if signal {
                rep.flag(format!("worst-case value at or above -{} : market free lunch signal", format_value(*delta)));
            }
            Ok((rep, if signal { Exit::Found } else { Exit::Clean }))
        }
        SeqCmd::Nafl { family, eps, young } => {
            let fam = input::family(family.family.as_ref(), family.prefix)?;
            let f = input::young(young)?;
            let mut lunch = false;
            let mut unseparated = Vec::new();
            for n in 1..=fam.prefix() {
                let o = nafl_check(&fam.market(n)?, *eps, &f)?;
                lunch |= o.status == NaflStatus::Witness && o.upper == 0.0;
                if o.status == NaflStatus::Witness {
                    unseparated.push(n);
                }
                rep.add_nafl(n, *eps, &f, &o);
            }
            if !unseparated.is_empty() {
                rep.line(format!("{f} does not separate at n = {unseparated:?}; try a larger Young function"));
            }
            if lunch {
                rep.flag("a superreplicable claim lies in D^eps: free lunch");
            }
            Ok((rep, if lunch { Exit::Found } else { Exit::Clean }))
        }
        SeqCmd::Build { family, levels, young, beliefs, save } => {
            let fam = input::family(family.family.as_ref(), family.prefix)?;
            let config = BuildConfig {
                young_grid: youngs(young)?,
                levels: *levels,
                beliefs: beliefs.as_ref().map(|p| input::measures(p)).transpose()?,
            };
            match build_bicontiguous(&fam, &config) {
                Ok(out) => {
                    rep.add_build(&out);
                    if let Some(path) = save {
                        let json = serde_json::to_string_pretty(&out.seq)
                            .map_err(|e| Error::InvalidInput(format!("cannot serialise measures: {e}")))?;
                        std::fs::write(path, json)
                            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
                    }
                    Ok((rep, Exit::Clean))
                }
                Err(e @ (Error::NoEquivalentMartingaleMeasure { .. } | Error::MarketFreeLunch { .. })) => {
                    rep.line(format!("construction refused: {e}"));
                    rep.row(None, "build", 0.0, e.to_string());
                    if fam.arbitrage_event().is_some() {
                        rep.flag("the family violates the standing no-arbitrage assumption");
                    }
                    Ok((rep, Exit::Found))
                }
                Err(e) => Err(e),
            }
        }
    }
}
