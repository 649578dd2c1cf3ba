use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use opmod_core::classical::{multiplication_matrix, FamilyKind};
use opmod_core::connection::{
    convert_to_known, convert_to_modified, modified_jacobi_tridiagonal, write_tridiagonal_csv, Backend,
    ConnectionFactor, ConnectionProblem,
};
use opmod_core::displacement::{
    build_generators, cholesky_dense_reference, fast_cholesky, fast_cholesky_banded, generators_from_columns,
};
use opmod_core::gram::{effective_bandwidth, gram_banded_from_moments, gram_columns, gram_from_moments};
use opmod_core::hodlr::{
    hodlr_cholesky, hodlr_compress, write_rank_csv, BlockOracle, CompressOptions, HodlrMatrix, TphOracle,
};
use opmod_core::moments::{moment_errors, MomentVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::RunConfig;
use crate::CliError;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            let n: usize = t.trim().parse().map_err(|_| CliError::Config(format!("bad size {t:?}")))?;
            if n < 2 {
                return Err(CliError::Config(format!("sizes must be at least 2, got {n}")));
            }
            Ok(n)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Dense,
    Displacement,
    Banded,
    Hodlr,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Dense => "dense",
            Algo::Displacement => "displacement",
            Algo::Banded => "banded",
            Algo::Hodlr => "hodlr",
        }
    }
}

pub fn parse_algos(s: &str) -> Result<Vec<Algo>, CliError> {
    s.split(',')
        .map(|t| match t.trim() {
            "dense" => Ok(Algo::Dense),
            "displacement" => Ok(Algo::Displacement),
            "banded" => Ok(Algo::Banded),
            "hodlr" => Ok(Algo::Hodlr),
            other => Err(CliError::Config(format!("unknown algorithm {other:?}"))),
        })
        .collect()
}

fn compress_options(cfg: &RunConfig) -> Result<CompressOptions, CliError> {
    Ok(CompressOptions {
        tol: cfg.tol,
        leaf_size: cfg.leaf,
        seed: cfg.hodlr_seed()?,
    })
}

fn problem(cfg: &RunConfig) -> Result<ConnectionProblem, CliError> {
    let mu = cfg.weight.moments(&cfg.family, 2 * cfg.n - 1)?;
    let mut p = ConnectionProblem::new(mu, cfg.n)?;
    if let Some(b) = cfg.backend {
        p = p.with_backend(b);
    }
    if p.backend == Backend::HodlrCholesky {
        p = p.with_hodlr_options(compress_options(cfg)?);
    }
    Ok(p)
}

pub fn cmd_moments(cfg: &RunConfig, m: usize, check: bool) -> Result<(), CliError> {
    if m == 0 {
        return Err(CliError::Config("--m must be positive".into()));
    }
    let mu = cfg.weight.moments(&cfg.family, m)?;
    let errors = if check {
        let q = cfg
            .weight
            .quadrature_moments(&cfg.family, m)
            .ok_or_else(|| CliError::Config("--check-quadrature needs a weight with pointwise values".into()))?;
        Some(moment_errors(mu.values(), &q))
    } else {
        None
    };
    let mut out = sink(cfg.out.as_deref())?;
    match &errors {
        Some(e) => {
            writeln!(out, "n,mu,rel_err")?;
            for (k, (v, e)) in mu.values().iter().zip(e).enumerate() {
                writeln!(out, "{k},{v:.17e},{e:.3e}")?;
            }
        }
        None => mu.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_factor(cfg: &RunConfig, jacobi: Option<&Path>) -> Result<(), CliError> {
    let p = problem(cfg)?;
    let t0 = Instant::now();
    let x = p.multiplication()?;
    let w = p.fill(&x)?;
    let fill = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let r = p.factor(&w, &x)?;
    let factor = t1.elapsed().as_secs_f64();
    let residual = r.relative_residual(&w.section);
    if let Some(path) = &cfg.out {
        let mut out = sink(Some(path))?;
        match &r {
            ConnectionFactor::Triangular(l) if path.extension().is_some_and(|e| e == "bin") => l.write_band(&mut out)?,
            ConnectionFactor::Triangular(l) => l.write_csv(&mut out)?,
            ConnectionFactor::Hodlr(h) => write_rank_csv(&h.rank_report(), &mut out)?,
        }
        out.flush()?;
    }
    if let Some(path) = jacobi {
        let xq = modified_jacobi_tridiagonal(&r, &x)?;
        let mut out = sink(Some(path))?;
        write_tridiagonal_csv(&xq, &mut out)?;
        out.flush()?;
    }
    println!("n,fill_seconds,factor_seconds,rel_frobenius_residual");
    println!("{},{fill:.6},{factor:.6},{residual:.3e}", cfg.n);
    Ok(())
}

fn time<T>(repeat: usize, mut f: impl FnMut() -> Result<T, CliError>) -> Result<f64, CliError> {
    let mut best = f64::INFINITY;
    for _ in 0..repeat {
        let t = Instant::now();
        std::hint::black_box(f()?);
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

fn oracle_for(mu: &MomentVector, x: &opmod_core::classical::TridiagonalSection, n: usize) -> Result<Box<dyn BlockOracle>, CliError> {
    if mu.family().kind() == FamilyKind::ChebyshevT {
        Ok(Box::new(TphOracle::new(mu.values(), n)?))
    } else {
        Ok(Box::new(gram_from_moments(mu, x, n)?.to_dense()))
    }
}

pub fn cmd_bench(cfg: &RunConfig, sizes: &[usize], algos: &[Algo], repeat: usize) -> Result<(), CliError> {
    let mut out = sink(cfg.out.as_deref())?;
    writeln!(out, "n,algo,seconds")?;
    for &n in sizes {
        let mu = cfg.weight.moments(&cfg.family, 2 * n - 1)?;
        let x = multiplication_matrix(&cfg.family, 2 * n - 1)?;
        for &algo in algos {
            let secs = match algo {
                Algo::Dense => {
                    let w = gram_from_moments(&mu, &x, n)?;
                    time(repeat, || Ok(cholesky_dense_reference(&w)?))?
                }
                Algo::Displacement => {
                    let cols = gram_columns(&mu, &x, n, &[0, n - 2, n - 1])?;
                    let g = generators_from_columns(&cols[1], &cols[2], &x)?;
                    time(repeat, || Ok(fast_cholesky(&cols[0], &x, &g)?))?
                }
                Algo::Banded => {
                    let b = effective_bandwidth(&mu);
                    if b + 1 >= n {
                        return Err(CliError::Config(format!(
                            "banded algorithm needs band-limited moments; bandwidth {b} at n = {n}"
                        )));
                    }
                    let w = gram_banded_from_moments(&mu, &x, n, b)?;
                    let g = build_generators(&w, &x)?;
                    let c = w.first_column();
                    time(repeat, || Ok(fast_cholesky_banded(&c, &x, &g, b)?))?
                }
                Algo::Hodlr => {
                    let opts = compress_options(cfg)?;
                    let oracle = oracle_for(&mu, &x, n)?;
                    time(repeat, || {
                        let h = hodlr_compress(oracle.as_ref(), &opts)?;
                        Ok(hodlr_cholesky(&h)?)
                    })?
                }
            };
            writeln!(out, "{n},{},{secs:.6}", algo.name())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn factor_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.factor.{}", ext.to_string_lossy()),
        None => format!("{stem}.factor"),
    };
    out.with_file_name(name)
}

pub fn cmd_rankmap(cfg: &RunConfig, factor_out: Option<&Path>) -> Result<(), CliError> {
    let opts = compress_options(cfg)?;
    let n = cfg.n;
    let mu = cfg.weight.moments(&cfg.family, 2 * n - 1)?;
    let x = multiplication_matrix(&cfg.family, 2 * n - 1)?;
    let h: HodlrMatrix = hodlr_compress(oracle_for(&mu, &x, n)?.as_ref(), &opts)?;
    let r = hodlr_cholesky(&h)?;
    let factor_path = factor_out.map(Path::to_path_buf).or_else(|| cfg.out.as_deref().map(factor_report_path));
    let mut out = sink(cfg.out.as_deref())?;
    write_rank_csv(&h.rank_report(), &mut out)?;
    match &factor_path {
        Some(p) => {
            out.flush()?;
            let mut f = sink(Some(p))?;
            write_rank_csv(&r.rank_report(), &mut f)?;
            f.flush()?;
        }
        None => {
            writeln!(out)?;
            write_rank_csv(&r.rank_report(), &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_coefficients(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            // header row
            Err(_) if i == 0 => {}
            Err(_) => return Err(CliError::Config(format!("{}:{}: not a number: {field:?}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn norms(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d2 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n2 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    let di = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let ni = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    (d2 / n2, di / ni)
}

pub fn cmd_transform(cfg: &RunConfig, input: Option<&Path>, to_modified: bool) -> Result<(), CliError> {
    let n = cfg.n;
    let v = match input {
        Some(p) => read_coefficients(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        }
    };
    if v.len() != n {
        return Err(CliError::Config(format!("expected {n} coefficients, got {}", v.len())));
    }
    let p = problem(cfg)?;
    let r = opmod_core::connection::connection_coefficients(&p)?;
    let (fwd, back) = if to_modified {
        let f = convert_to_modified(&r, &v)?;
        let b = convert_to_known(&r, &f)?;
        (f, b)
    } else {
        let f = convert_to_known(&r, &v)?;
        let b = convert_to_modified(&r, &f)?;
        (f, b)
    };
    let (e2, einf) = norms(&back, &v);
    let mut out = sink(cfg.out.as_deref())?;
    writeln!(out, "k,input,output")?;
    for (k, (a, b)) in v.iter().zip(&fwd).enumerate() {
        writeln!(out, "{k},{a:.17e},{b:.17e}")?;
    }
    out.flush()?;
    let stats = format!("n,backend,rel_err_2,rel_err_inf\n{n},{},{e2:.3e},{einf:.3e}", p.backend);
    if cfg.out.is_some() {
        println!("{stats}");
    } else {
        eprintln!("{stats}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_report_names() {
        assert_eq!(factor_report_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.factor.csv"));
        assert_eq!(factor_report_path(Path::new("ranks")), PathBuf::from("ranks.factor"));
    }

    #[test]
    fn option_lists() {
        assert_eq!(parse_sizes("4, 8").unwrap(), vec![4, 8]);
        assert!(parse_sizes("1").is_err());
        assert_eq!(parse_algos("dense,hodlr").unwrap(), vec![Algo::Dense, Algo::Hodlr]);
        assert!(parse_algos("qr").is_err());
    }

    #[test]
    fn roundtrip_norms() {
        let (a, b) = norms(&[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!((a, b), (0.0, 0.0));
    }
}
