# orchestrator.py

import hashlib
import json
import logging
import time
from fractions import Fraction as Frac
from pathlib import Path
from typing import Any, Dict, List, Optional

from joblib import Parallel, delayed
from tqdm import tqdm

from audit_system import AuditLogger
from constructor import ProductionPackingConstructor
from degseq_enum import ProductionGraphEnumerator, relevant_pairs, write_families
from graph_core import graph6_decode
from packing import (
    PackingProblem,
    certificate_from_json,
    certificate_to_json,
    make_certificate,
    min_uncovered,
    read_certificate,
    verify_certificate,
    write_certificate,
)
from pdf_report_generator import PDFReportGenerator
from ratlp import ProductionLPSolver

HALF = Frac(1, 2)


def solve_graph(text: str, a: int, beta: str, presolve: bool) -> Dict[str, Any]:
    """Worker: exact optimum of one graph6 instance plus its certificate document."""
    g = graph6_decode(text)
    p = PackingProblem(g, triangle_cap=Frac(beta), target_uncovered=Frac(a))
    optimum, packing = min_uncovered(p, ProductionLPSolver(presolve=presolve))
    cert = make_certificate(p, packing, optimum, provenance="exact LP optimum")
    return {
        "graph": text,
        "optimum": str(optimum),
        "passed": optimum <= a,
        "certificate": certificate_to_json(cert),
    }


class PackingSweepOrchestrator:
    """
    End-to-end runs behind the CLI: census, sweeps, single solves,
    constructions and certificate checks. Every run is an audit session
    and returns {"success": ...}.
    """

    def __init__(
        self,
        out_dir: str = "results",
        jobs: int = 1,
        cache_dir: str = "cache/packing",
        audit_dir: str = "audit_logs",
        presolve: bool = True,
        lp_cutoff: int = 13,
        show_progress: bool = False
    ):
        self.out_dir = Path(out_dir)
        self.jobs = max(1, jobs)
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.presolve = presolve
        self.lp_cutoff = lp_cutoff
        self.show_progress = show_progress

        self.enumerator = ProductionGraphEnumerator(jobs=self.jobs, show_progress=show_progress)
        self.solver = ProductionLPSolver(presolve=presolve)
        self.audit_logger = AuditLogger(audit_dir)
        self.logger = self._setup_logging()

    # ------------------------------------------------------------------
    # MAIN PIPELINES
    # ------------------------------------------------------------------

    def enumerate(self, n: int, m: int, out_dir: Optional[str] = None) -> Dict[str, Any]:
        target = Path(out_dir) if out_dir else self.out_dir / f"N{n}M{m}"
        session_id = self.audit_logger.start_session("enumerate", {"n": n, "m": m, "out": target})
        try:
            families = self.enumerator.enumerate(n, m)
            self.audit_logger.log_event(session_id, "families_expanded", {"sequences": len(families)})
            manifest = write_families(families, target, n, m)
            total = sum(len(f.graphs) for f in families.values())
            self.audit_logger.log_event(session_id, "manifest_written", {"manifest": manifest, "total": total})
            self.audit_logger.close_session(session_id)
            return {
                "success": True,
                "session_id": session_id,
                "manifest": str(manifest),
                "total": total,
                "counts": {",".join(map(str, s)): len(f.graphs) for s, f in sorted(families.items(), reverse=True)},
            }
        except Exception as e:
            return self._fail(session_id, e)

    def prove(self, n: int, a: int, beta: Frac = HALF, out_dir: Optional[str] = None, pdf: bool = False) -> Dict[str, Any]:
        """
        Exact optimum for every graph with exactly n - 4 + a missing edges.
        A graph with optimum above a is a claim failure: listed, and its
        certificate kept as witness.json.
        """
        m = n * (n - 1) // 2 - (n - 4 + a)
        target = Path(out_dir) if out_dir else self.out_dir / f"N{n}_a{a}"
        session_id = self.audit_logger.start_session("prove", {"n": n, "a": a, "beta": beta, "jobs": self.jobs})
        started = time.monotonic()
        try:
            graphs = self.enumerator.graphs(n, m)
            self.audit_logger.log_event(session_id, "graphs_enumerated", {"m": m, "count": len(graphs)})
            self.logger.info(f"Sweep N={n} a={a}: {len(graphs)} graphs, {self.jobs} workers")

            results = self._solve_all(graphs, a, beta)
            self.audit_logger.log_event(session_id, "graphs_solved", {"count": len(results)})

            summary = self._write_sweep(target, n, a, beta, results)
            summary["wall_time"] = round(time.monotonic() - started, 3)
            if pdf:
                summary["pdf_report"] = str(PDFReportGenerator(str(target)).generate_sweep(summary, results))
            self.audit_logger.log_event(session_id, "report_written", {
                "report": summary["report"], "failures": len(summary["failures"]), "max_optimum": summary["max_optimum"]
            })
            self.audit_logger.close_session(session_id)
            self.logger.info(
                f"Sweep N={n} a={a} finished: max optimum {summary['max_optimum']}, "
                f"{len(summary['failures'])} failures, {summary['wall_time']}s"
            )
            return {"success": True, "session_id": session_id, **summary}
        except Exception as e:
            return self._fail(session_id, e)

    def prove_relevant(self, beta: Frac = HALF, pdf: bool = False) -> List[Dict[str, Any]]:
        return [self.prove(n, a, beta=beta, pdf=pdf) for n, _, a in relevant_pairs()]

    def solve(self, text: str, beta: Frac = HALF, capacities: Optional[Dict] = None) -> Dict[str, Any]:
        session_id = self.audit_logger.start_session("solve", {"graph": text, "beta": beta})
        try:
            g = graph6_decode(text.strip())
            p = PackingProblem(g, capacities=capacities, triangle_cap=beta)
            optimum, packing = min_uncovered(p, self.solver)
            cert = make_certificate(p, packing, optimum, provenance="exact LP optimum")
            self.audit_logger.log_event(session_id, "solved", {"optimum": optimum})
            self.audit_logger.close_session(session_id)
            return {
                "success": True,
                "session_id": session_id,
                "optimum": str(optimum),
                "certificate": certificate_to_json(cert),
            }
        except Exception as e:
            return self._fail(session_id, e)

    def construct(self, text: str, a: int) -> Dict[str, Any]:
        session_id = self.audit_logger.start_session("construct", {"graph": text, "a": a})
        engine = ProductionPackingConstructor(lp_cutoff=self.lp_cutoff, solver=self.solver)
        try:
            g = graph6_decode(text.strip())
            cert = engine.certify(g, a)
            self.audit_logger.log_trace(session_id, engine.trace)
            self.audit_logger.log_event(session_id, "constructed", {
                "triangles": len(cert.packing.weights), "uncovered": cert.claimed_uncovered
            })
            self.audit_logger.close_session(session_id)
            return {"success": True, "session_id": session_id, "certificate": certificate_to_json(cert)}
        except Exception as e:
            if engine.trace:
                self.audit_logger.log_trace(session_id, engine.trace)
            return self._fail(session_id, e)

    def verify(
        self,
        certificate_path: str,
        text: Optional[str] = None,
        a: Optional[Frac] = None,
        beta: Optional[Frac] = None
    ) -> Dict[str, Any]:
        session_id = self.audit_logger.start_session("verify", {"certificate": certificate_path, "a": a, "beta": beta})
        try:
            cert = read_certificate(certificate_path)
            graph = graph6_decode(text.strip()) if text else None
            report = verify_certificate(cert, graph=graph, a=a, beta=beta)
            self.audit_logger.log_event(session_id, "verified", report.to_dict())
            self.audit_logger.close_session(session_id, status="completed" if report.passed else "rejected")
            return {"success": True, "session_id": session_id, "passed": report.passed, "report": report.to_dict()}
        except Exception as e:
            return self._fail(session_id, e)

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _solve_all(self, graphs: List[str], a: int, beta: Frac) -> List[Dict[str, Any]]:
        cached, pending = {}, []
        for text in graphs:
            hit = self._cache_get(text, a, beta)
            if hit is None:
                pending.append(text)
            else:
                cached[text] = hit
        self.logger.info(f"{len(cached)} cached, {len(pending)} to solve")

        work = tqdm(pending, desc="Solving LPs", disable=not self.show_progress)
        if self.jobs > 1 and len(pending) > 1:
            fresh = Parallel(n_jobs=self.jobs)(
                delayed(solve_graph)(text, a, str(beta), self.presolve) for text in work
            )
        else:
            fresh = [solve_graph(text, a, str(beta), self.presolve) for text in work]

        # single writer
        for result in fresh:
            self._cache_put(result["graph"], a, beta, result)
            cached[result["graph"]] = result
        return [cached[text] for text in graphs]

    def _write_sweep(self, target: Path, n: int, a: int, beta: Frac, results: List[Dict[str, Any]]) -> Dict[str, Any]:
        certs = target / "certificates"
        lines = ["index\tgraph6\toptimum\tstatus"]
        failures = []
        for i, result in enumerate(results):
            write_certificate(certificate_from_json(result["certificate"]), certs / f"{i:06d}.json")
            status = "pass" if result["passed"] else "FAIL"
            lines.append(f"{i}\t{result['graph']}\t{result['optimum']}\t{status}")
            if not result["passed"]:
                failures.append(result["graph"])

        max_optimum = max((Frac(r["optimum"]) for r in results), default=Frac(0))
        lines += [
            f"# N={n} a={a} beta={beta}",
            f"# graphs\t{len(results)}",
            f"# passed\t{len(results) - len(failures)}",
            f"# failed\t{len(failures)}",
            f"# max_optimum\t{max_optimum}",
        ]
        report = target / "report.txt"
        report.write_text("\n".join(lines) + "\n", encoding="utf-8")

        witness = None
        if failures:
            worst = max((r for r in results if not r["passed"]), key=lambda r: (Frac(r["optimum"]), r["graph"]))
            witness = write_certificate(certificate_from_json(worst["certificate"]), target / "witness.json")
            self.logger.warning(f"{len(failures)} graphs exceed a={a}; witness {worst['graph']}")

        return {
            "n": n,
            "a": a,
            "beta": str(beta),
            "count": len(results),
            "failures": failures,
            "max_optimum": str(max_optimum),
            "all_passed": not failures,
            "report": str(report),
            "witness": str(witness) if witness else None,
        }

    def _cache_file(self, text: str, a: int, beta: Frac) -> Path:
        key = hashlib.md5(f"{text}|{a}|{beta}".encode()).hexdigest()
        return self.cache_dir / f"{key}.json"

    def _cache_get(self, text: str, a: int, beta: Frac) -> Optional[Dict[str, Any]]:
        file = self._cache_file(text, a, beta)
        if file.exists():
            return json.loads(file.read_text())
        return None

    def _cache_put(self, text: str, a: int, beta: Frac, result: Dict[str, Any]):
        self._cache_file(text, a, beta).write_text(json.dumps(result))

    def _fail(self, session_id: str, error: Exception) -> Dict[str, Any]:
        self.logger.error(f"{type(error).__name__}: {error}")
        self.audit_logger.log_event(session_id, "error", {"type": type(error).__name__, "message": str(error)})
        self.audit_logger.close_session(session_id, status="failed")
        return {
            "success": False,
            "session_id": session_id,
            "error": str(error),
            "error_type": type(error).__name__,
        }

    def _setup_logging(self):
        logger = logging.getLogger("SweepOrchestrator")
        if not logger.handlers:
            handler = logging.StreamHandler()
            formatter = logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.setLevel(logging.INFO)
        return logger
