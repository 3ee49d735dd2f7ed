"""Bundle specifications, their multiplier, and the induced action on sections.

A spec is a layered graph: layer j carries irreps with parameter λ - j, each
with a multiplicity d, and edges j-1 → j carry coefficient matrices y. The
fibre V is the direct sum over layers and irreps of C^d ⊗ W, laid out in
order (layer, irrep) with the multiplicity index outermost inside a block.
Sections are ``Poly`` objects with values in V.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import SpecError, UnsupportedDimension
from .kss_reps import IrrepLabel, admissible, cg_projection, eval_irrep, is_filiform_triple, rho_matrix
from .mobius import factorize_batch


@dataclass(frozen=True)
class LayerIrrep:
    m: int
    d: int = 1


@dataclass(frozen=True)
class Block:
    j: int
    idx: int
    label: IrrepLabel
    d: int
    offset: int

    @property
    def wdim(self):
        return self.label.dim

    @property
    def size(self):
        return self.d * self.label.dim

    @property
    def slice(self):
        return slice(self.offset, self.offset + self.size)


@dataclass(eq=False)
class BundleSpec:
    n: int
    lam: float
    layers: list
    edges: dict = field(default_factory=dict)
    hermitian: dict = field(default_factory=dict)
    mu: dict = field(default_factory=dict)
    indecomposable: bool = False

    def __post_init__(self):
        self.layers = [[x if isinstance(x, LayerIrrep) else LayerIrrep(*x) for x in layer]
                       for layer in self.layers]
        self.edges = {tuple(k): np.atleast_2d(np.asarray(v, dtype=complex))
                      for k, v in self.edges.items()}
        blocks = []
        off = 0
        for j, layer in enumerate(self.layers):
            for idx, irr in enumerate(layer):
                lab = IrrepLabel(self.n, irr.m, self.lam - j)
                blocks.append(Block(j, idx, lab, irr.d, off))
                off += irr.d * lab.dim
        self.blocks = blocks
        self.dim = off
        self._index = {(b.j, b.idx): b for b in blocks}

    def block(self, j, idx):
        return self._index[(j, idx)]

    def mu_of(self, j, idx):
        d = self.layers[j][idx].d
        return np.asarray(self.mu.get((j, idx), np.eye(d)), dtype=complex)

    def hermitian_of(self, j, idx):
        d = self.layers[j][idx].d
        return np.asarray(self.hermitian.get((j, idx), np.eye(d)), dtype=complex)

    @property
    def depth(self):
        return len(self.layers) - 1

    def nonzero_edges(self, tol=0.0):
        return {k: v for k, v in self.edges.items() if np.abs(v).max() > tol}

    def with_edges(self, edges):
        return BundleSpec(self.n, self.lam, self.layers, edges, self.hermitian, self.mu,
                          self.indecomposable)

    def scaled(self, t):
        return self.with_edges({k: t * v for k, v in self.edges.items()})

    def with_lambda(self, lam):
        return BundleSpec(self.n, lam, self.layers, self.edges, self.hermitian, self.mu,
                          self.indecomposable)

    def with_mu(self, mu):
        return BundleSpec(self.n, self.lam, self.layers, self.edges, self.hermitian, mu,
                          self.indecomposable)


def chain_spec(n, degrees, lam, y=1.0):
    """Multiplicity-free chain with one irrep per layer and scalar edges y."""
    layers = [[LayerIrrep(m, 1)] for m in degrees]
    edges = {(j, 0, 0): [[y]] for j in range(1, len(degrees))}
    return BundleSpec(n, lam, layers, edges, indecomposable=True)


def scalar_spec(n, lam):
    return BundleSpec(n, lam, [[LayerIrrep(0, 1)]])


def lower_block(spec, edge):
    """Target and source blocks of an edge key (j, α, β)."""
    j, a, b = edge
    return spec.block(j, b), spec.block(j - 1, a)


def _nilpotent(spec, Y):
    """The nilpotent part ϱ⁻(Y) for batched row data Y (M, n)."""
    M = Y.shape[0]
    N = np.zeros((M, spec.dim, spec.dim), dtype=complex)
    for edge, ymat in spec.edges.items():
        tgt, src = lower_block(spec, edge)
        P = cg_projection(src.label.m, tgt.label.m, spec.n)
        R = rho_matrix(P, Y)
        N[:, tgt.slice, src.slice] = np.einsum("ab,mts->matbs", ymat, R).reshape(
            M, tgt.size, src.size)
    return N


def _diagonal(spec, k):
    M = k.A.shape[0]
    Dg = np.zeros((M, spec.dim, spec.dim), dtype=complex)
    for b in spec.blocks:
        E = eval_irrep(b.label, k)
        Dg[:, b.slice, b.slice] = np.einsum("ab,mts->matbs", np.eye(b.d), E).reshape(
            M, b.size, b.size)
    return Dg


def _expm_nilpotent(N, order):
    out = np.broadcast_to(np.eye(N.shape[-1], dtype=complex), N.shape).copy()
    term = out.copy()
    for k in range(1, order + 1):
        term = term @ N / k
        out = out + term
    return out


def multiplier_batch(spec, g, Z):
    fb = factorize_batch(g, Z)
    D = _diagonal(spec, fb.k)
    if not spec.edges:
        return D
    return D @ _expm_nilpotent(_nilpotent(spec, fb.y), spec.depth)


def multiplier(spec, g, z):
    """ϱ(b̃(g, z)) = ϱ⁰(k̃)·exp(ϱ⁻(Y)), block lower-triangular."""
    return multiplier_batch(spec, g, np.asarray(z, dtype=complex)[None, :])[0]


def act_batch(spec, g, f, Z):
    """(U_g f)(z) = ϱ(b̃(g⁻¹, z))⁻¹ f(g⁻¹z) at the rows of Z.

    ``f`` is a ``Poly`` or any callable mapping (M, n) points to (M, dim).
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    ginv = g.inverse()
    fb = factorize_batch(ginv, Z)
    D = _diagonal(spec, fb.k)
    vals = f(fb.gz)
    # ϱ⁻¹ = exp(-N)·D⁻¹, the nilpotent part inverted by a finite series
    out = np.linalg.solve(D, vals[..., None])
    if spec.edges:
        out = _expm_nilpotent(-_nilpotent(spec, fb.y), spec.depth) @ out
    return out[..., 0]


def act(spec, g, f, z):
    return act_batch(spec, g, f, np.asarray(z, dtype=complex)[None, :])[0]


def component(spec, f, j, idx):
    """The (j, idx) component of a section as a Poly with values in C^d ⊗ W."""
    b = spec.block(j, idx)
    E = np.zeros((b.size, spec.dim))
    E[:, b.slice] = np.eye(b.size)
    return f.map(E)


@dataclass
class Violation:
    kind: str
    location: str
    detail: str


@dataclass
class ValidationReport:
    violations: list

    @property
    def valid(self):
        return not self.violations

    def __bool__(self):
        return self.valid


def _pos_def(M):
    M = np.asarray(M, dtype=complex)
    if M.shape[0] != M.shape[1] or np.abs(M - M.conj().T).max() > 1e-12:
        return False
    return np.linalg.eigvalsh(M).min() > 0


def validate(spec, tol=1e-12):
    out = []
    n = spec.n
    for j, layer in enumerate(spec.layers):
        seen = set()
        for idx, irr in enumerate(layer):
            loc = f"layers[{j}][{idx}]"
            if irr.d < 1:
                out.append(Violation("multiplicity", loc, "d must be positive"))
            if irr.m in seen:
                out.append(Violation("duplicate", loc, f"irrep m={irr.m} repeated in layer"))
            seen.add(irr.m)
            if (n == 1 and irr.m != 0) or (n > 2 and irr.m != 0):
                out.append(Violation("dimension", loc, f"m={irr.m} unsupported for n={n}"))
            for name, M in (("hermitian", spec.hermitian_of(j, idx)), ("mu", spec.mu_of(j, idx))):
                if M.shape != (irr.d, irr.d) or not _pos_def(M):
                    out.append(Violation(name, loc, "must be positive definite d×d"))
    for (j, a, b), y in spec.edges.items():
        loc = f"edges[{j},{a},{b}]"
        if not (1 <= j <= spec.depth) or a >= len(spec.layers[j - 1]) or b >= len(spec.layers[j]):
            out.append(Violation("edge", loc, "edge does not join adjacent layers"))
            continue
        src, tgt = spec.layers[j - 1][a], spec.layers[j][b]
        if not admissible(n, src.m, tgt.m):
            out.append(Violation("admissible", loc, f"({src.m}, {tgt.m}) not admissible"))
        if y.shape != (tgt.d, src.d):
            out.append(Violation("shape", loc, f"y has shape {y.shape}, expected {(tgt.d, src.d)}"))
    for (j, a, b), y1 in spec.edges.items():
        for (j2, b2, c), y2 in spec.edges.items():
            if j2 != j + 1 or b2 != b:
                continue
            try:
                ms = (spec.layers[j - 1][a].m, spec.layers[j][b].m, spec.layers[j + 1][c].m)
                if n == 1 or is_filiform_triple(*ms, n=n):
                    continue
            except Exception:
                continue
            if y2.shape[1] == y1.shape[0] and np.abs(y2 @ y1).max() > tol:
                out.append(Violation("filiform", f"edges[{j},{a},{b}]->[{j + 1},{b},{c}]",
                                     f"nonzero y-product along non-filiform triple {ms}"))
    if spec.indecomposable and not _connected(spec):
        out.append(Violation("indecomposable", "edges", "layered graph is disconnected"))
    return ValidationReport(out)


def _connected(spec):
    nodes = [(b.j, b.idx) for b in spec.blocks]
    if not nodes:
        return True
    adj = {v: set() for v in nodes}
    for (j, a, b), y in spec.nonzero_edges().items():
        adj[(j - 1, a)].add((j, b))
        adj[(j, b)].add((j - 1, a))
    seen = {nodes[0]}
    stack = [nodes[0]]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(nodes)


def gauge_equivalent(s1, s2, tol=1e-9, seed=0):
    """Whether y' = a_β⁻¹ y a_α for some invertible a on every (layer, irrep).

    The equations a_β y'_e = y_e a_α are linear in the a's; a generic element
    of the solution space is invertible iff any element is.
    """
    if s1.n != s2.n or [[x.m for x in L] for L in s1.layers] != [[x.m for x in L] for L in s2.layers]:
        return False
    if [[x.d for x in L] for L in s1.layers] != [[x.d for x in L] for L in s2.layers]:
        return False
    keys = [(b.j, b.idx) for b in s1.blocks]
    dims = {(b.j, b.idx): b.d for b in s1.blocks}
    offs = {}
    total = 0
    for k in keys:
        offs[k] = total
        total += dims[k] ** 2
    rows = []
    for e in set(s1.edges) | set(s2.edges):
        j, a, b = e
        src, tgt = (j - 1, a), (j, b)
        y = s1.edges.get(e)
        yp = s2.edges.get(e)
        if y is None:
            y = np.zeros_like(yp)
        if yp is None:
            yp = np.zeros_like(y)
        dt, ds = dims[tgt], dims[src]
        # vec(a_t y') - vec(y a_s) = 0, column-major vec
        for r in range(dt):
            for c in range(ds):
                row = np.zeros(total, dtype=complex)
                for k in range(dt):
                    row[offs[tgt] + r + k * dt] += yp[k, c]
                for k in range(ds):
                    row[offs[src] + k + c * ds] -= y[r, k]
                rows.append(row)
    if rows:
        Msys = np.array(rows)
        _, sv, vh = np.linalg.svd(Msys)
        rank = int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 1.0)))
        null = vh[rank:].conj()
    else:
        null = np.eye(total, dtype=complex)
    if null.shape[0] == 0:
        return False
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=null.shape[0]) + 1j * rng.normal(size=null.shape[0])
    x = coef @ null
    for k in keys:
        d = dims[k]
        a = x[offs[k]:offs[k] + d * d].reshape((d, d), order="F")
        if abs(np.linalg.det(a)) < tol:
            return False
    return True


def _parse_complex(entry, where):
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2 and all(isinstance(x, (int, float)) for x in entry):
        return complex(entry[0], entry[1])
    raise SpecError(f"{where}: expected a number or [re, im] pair")


def _parse_matrix(data, shape, where):
    if data is None:
        return None
    flat = []

    def walk(x, path):
        if isinstance(x, list) and x and isinstance(x[0], list) and not (
                len(x) == 2 and all(isinstance(v, (int, float)) for v in x)):
            for i, v in enumerate(x):
                walk(v, f"{path}[{i}]")
        elif isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            flat.append(_parse_complex(x, path))
        elif isinstance(x, list):
            for i, v in enumerate(x):
                flat.append(_parse_complex(v, f"{path}[{i}]"))
        else:
            flat.append(_parse_complex(x, path))

    walk(data, where)
    if len(flat) != shape[0] * shape[1]:
        raise SpecError(f"{where}: expected {shape[0] * shape[1]} entries, got {len(flat)}")
    return np.array(flat, dtype=complex).reshape(shape)


def spec_from_dict(doc):
    """Build a spec from the JSON document format.

    Edges refer to irreps by their Sym-degree ``m`` within the two layers.
    """
    try:
        n = int(doc["n"])
        lam = float(doc["lambda"])
        raw_layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"missing or malformed top-level field: {exc}") from None
    layers = []
    for j, layer in enumerate(raw_layers):
        if not isinstance(layer, list) or not layer:
            raise SpecError(f"layers[{j}]: expected a nonempty list")
        row = []
        for i, irr in enumerate(layer):
            try:
                row.append(LayerIrrep(int(irr["m"]), int(irr.get("d", 1))))
            except (KeyError, TypeError, ValueError):
                raise SpecError(f"layers[{j}][{i}]: expected {{'m': int, 'd': int}}") from None
        layers.append(row)

    def find(j, m, where):
        if not 0 <= j < len(layers):
            raise SpecError(f"{where}: layer {j} does not exist")
        for idx, irr in enumerate(layers[j]):
            if irr.m == m:
                return idx
        raise SpecError(f"{where}: no irrep with m={m} in layer {j}")

    edges = {}
    for e_i, e in enumerate(doc.get("edges", [])):
        where = f"edges[{e_i}]"
        try:
            j = int(e["j"])
            a = find(j - 1, int(e["from"]), where)
            b = find(j, int(e["to"]), where)
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"{where}: expected fields j, from, to, y") from None
        shape = (layers[j][b].d, layers[j - 1][a].d)
        edges[(j, a, b)] = _parse_matrix(e.get("y", [[1.0, 0.0]]), shape, f"{where}.y")

    def per_block(name):
        out = {}
        for i, item in enumerate(doc.get(name) or []):
            where = f"{name}[{i}]"
            try:
                j = int(item["j"])
                idx = find(j, int(item["m"]), where)
            except (KeyError, TypeError, ValueError):
                raise SpecError(f"{where}: expected fields j, m, matrix") from None
            d = layers[j][idx].d
            out[(j, idx)] = _parse_matrix(item["matrix"], (d, d), f"{where}.matrix")
        return out

    try:
        return BundleSpec(n, lam, layers, edges, per_block("hermitian"), per_block("mu"),
                          bool(doc.get("indecomposable", False)))
    except UnsupportedDimension as exc:
        raise SpecError(str(exc)) from None


def spec_to_dict(spec):
    layers = [[{"m": x.m, "d": x.d} for x in L] for L in spec.layers]
    edges = []
    for (j, a, b), y in sorted(spec.edges.items()):
        edges.append({"j": j, "from": spec.layers[j - 1][a].m, "to": spec.layers[j][b].m,
                      "y": [[float(v.real), float(v.imag)] for v in y.ravel()]})
    return {"n": spec.n, "lambda": spec.lam, "layers": layers, "edges": edges}


def load_spec(path):
    """Load a spec file; a bare name refers to one of the bundled examples."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = Path(path + ".json")
    if not p.exists():
        ref = resources.files("hhvb") / "data" / p.name
        if not ref.is_file():
            raise SpecError(f"{path}: no such spec file")
        text = ref.read_text()
    else:
        text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return spec_from_dict(doc)


def bundled_specs():
    return sorted(r.name[:-5] for r in (resources.files("hhvb") / "data").iterdir()
                  if r.name.endswith(".json"))
