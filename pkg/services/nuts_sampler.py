# services/nuts_sampler.py - Muestreador NUTS con adaptación por dual averaging y métrica diagonal

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional

import numpy as np

from config.settings import settings
from models.fit import DrawsMatrix, FitResult
from models.schemas import SamplerConfig, SamplerReport
from models.series import TimeSeries
from models.transforms import constrain_matrix, unconstrain_matrix
from services.autodiff import value_and_grad
from utils.exceptions import SamplerInitError

logger = logging.getLogger(__name__)

# Caída máxima de la log-densidad conjunta antes de declarar divergencia
DIVERGENCE_THRESHOLD = 1000.0
INIT_RADIUS = 2.0
INIT_ATTEMPTS = 100

# Ventanas de adaptación (valores por defecto de Stan)
INIT_BUFFER = 75
TERM_BUFFER = 50
BASE_WINDOW = 25


class NutsState:
    """
    Subárbol de la trayectoria NUTS

    Guarda los extremos (posición, momento, log-densidad y gradiente), la
    suma de momentos para el criterio de U-turn, el punto propuesto por
    muestreo multinomial y las estadísticas de aceptación.
    """

    def __init__(self, theta, r, L, grad, log_weight, keep_going, alpha, n_alpha, divergent, inv_metric):
        self.theta_minus = theta
        self.theta_plus = theta
        self.r_minus = r
        self.r_plus = r
        self.r_sum = np.copy(r)
        self.L_minus = L
        self.L_plus = L
        self.grad_minus = grad
        self.grad_plus = grad
        self.theta = theta
        self.L = L
        self.grad = grad
        self.log_weight = log_weight
        self.keep_going = keep_going
        self.alpha = alpha
        self.n_alpha = n_alpha
        self.divergent = divergent
        self.inv_metric = inv_metric

    def update(self, other, direction: int, root: bool, rng: np.random.Generator):
        """
        Une `other` a este árbol por el extremo indicado

        Con root=True `other` es la mitad nueva de la trayectoria (muestreo
        multinomial sesgado hacia ella); con root=False son dos subárboles
        hermanos (muestreo multinomial uniforme).
        """
        # r_minus_plus: extremo + del subárbol izquierdo; r_plus_minus: extremo - del derecho
        if direction == -1:
            r_minus_plus, r_plus_minus = other.r_plus, self.r_minus
            r_sum_minus, r_sum_plus = other.r_sum, self.r_sum
            self.theta_minus = other.theta_minus
            self.r_minus = other.r_minus
            self.L_minus = other.L_minus
            self.grad_minus = other.grad_minus
        else:
            r_minus_plus, r_plus_minus = self.r_plus, other.r_minus
            r_sum_minus, r_sum_plus = self.r_sum, other.r_sum
            self.theta_plus = other.theta_plus
            self.r_plus = other.r_plus
            self.L_plus = other.L_plus
            self.grad_plus = other.grad_plus

        self.alpha += other.alpha
        self.n_alpha += other.n_alpha
        self.divergent |= other.divergent
        self.keep_going = self.keep_going and other.keep_going
        if not self.keep_going:
            return

        if not root:
            self.log_weight = np.logaddexp(self.log_weight, other.log_weight)
        accept = float(np.exp(min(0.0, other.log_weight - self.log_weight)))
        if accept > 0.0 and rng.uniform() < accept:
            self.theta = other.theta
            self.L = other.L
            self.grad = other.grad
        if root:
            self.log_weight = np.logaddexp(self.log_weight, other.log_weight)

        self.r_sum = r_sum_minus + r_sum_plus

        # Criterio de U-turn generalizado sobre el árbol unido y entre subárboles
        m = self.inv_metric
        rho_minus_plus = r_sum_minus + r_plus_minus
        rho_plus_minus = r_sum_plus + r_minus_plus
        self.keep_going = bool(
            np.dot(self.r_sum, m * self.r_minus) > 0
            and np.dot(self.r_sum, m * self.r_plus) > 0
            and np.dot(rho_minus_plus, m * self.r_minus) > 0
            and np.dot(rho_minus_plus, m * r_plus_minus) > 0
            and np.dot(rho_plus_minus, m * r_minus_plus) > 0
            and np.dot(rho_plus_minus, m * self.r_plus) > 0
        )


def kinetic_energy(r, inv_metric):
    return 0.5 * np.dot(r, inv_metric * r)


def leapfrog(value_and_grad_fn, theta, grad, r, epsilon, inv_metric):
    """Un paso leapfrog con métrica diagonal"""
    r_new = r + 0.5 * epsilon * grad
    theta_new = theta + epsilon * inv_metric * r_new
    L_new, grad_new = value_and_grad_fn(theta_new)
    r_new = r_new + 0.5 * epsilon * grad_new
    return theta_new, r_new, L_new, grad_new


def _comparison(L, r, inv_metric, hamiltonian0):
    h = L - kinetic_energy(r, inv_metric)
    if not np.isfinite(h):
        return -np.inf
    return h - hamiltonian0


def build_tree(value_and_grad_fn, state, direction, depth, epsilon, inv_metric, hamiltonian0, rng):
    """Construye implícitamente un subárbol de profundidad `depth` en la dirección dada"""
    if depth == 0:
        if direction == -1:
            theta, r, grad = state.theta_minus, state.r_minus, state.grad_minus
        else:
            theta, r, grad = state.theta_plus, state.r_plus, state.grad_plus
        theta, r, L, grad = leapfrog(value_and_grad_fn, theta, grad, r, direction * epsilon, inv_metric)
        comparison = _comparison(L, r, inv_metric, hamiltonian0)
        divergent = -comparison > DIVERGENCE_THRESHOLD
        return NutsState(
            theta, r, L, grad,
            log_weight=comparison,
            keep_going=not divergent,
            alpha=float(np.exp(min(0.0, comparison))),
            n_alpha=1,
            divergent=divergent,
            inv_metric=inv_metric,
        )

    subtree = build_tree(value_and_grad_fn, state, direction, depth - 1, epsilon, inv_metric, hamiltonian0, rng)
    if subtree.keep_going:
        other = build_tree(value_and_grad_fn, subtree, direction, depth - 1, epsilon, inv_metric, hamiltonian0, rng)
        subtree.update(other, direction, root=False, rng=rng)
    return subtree


class Transition(NamedTuple):
    theta: np.ndarray
    L: float
    grad: np.ndarray
    accept_stat: float
    divergent: bool
    depth: int


def nuts_transition(value_and_grad_fn, theta, L, grad, epsilon, inv_metric, max_treedepth, rng) -> Transition:
    """Una iteración de NUTS a partir de (theta, L, grad)"""
    r = rng.normal(size=theta.size) / np.sqrt(inv_metric)
    hamiltonian0 = L - kinetic_energy(r, inv_metric)
    state = NutsState(theta, r, L, grad, 0.0, True, 0.0, 0, False, inv_metric)

    depth = 0
    while state.keep_going and depth < max_treedepth:
        direction = -1 if rng.uniform() < 0.5 else 1
        other = build_tree(value_and_grad_fn, state, direction, depth, epsilon, inv_metric, hamiltonian0, rng)
        state.update(other, direction, root=True, rng=rng)
        depth += 1

    accept_stat = state.alpha / state.n_alpha if state.n_alpha else 0.0
    return Transition(state.theta, state.L, state.grad, accept_stat, state.divergent, depth)


def find_reasonable_epsilon(value_and_grad_fn, theta, L, grad, epsilon, inv_metric, rng) -> float:
    """
    Duplica o divide el paso hasta que la aceptación de un paso leapfrog cruza 0.8

    Returns:
        Paso inicial para el dual averaging
    """
    log_target = np.log(0.8)

    def delta_h(eps):
        r = rng.normal(size=theta.size) / np.sqrt(inv_metric)
        h0 = L - kinetic_energy(r, inv_metric)
        _, r_new, L_new, _ = leapfrog(value_and_grad_fn, theta, grad, r, eps, inv_metric)
        h = L_new - kinetic_energy(r_new, inv_metric)
        return h - h0 if np.isfinite(h) else -np.inf

    direction = 1 if delta_h(epsilon) > log_target else -1
    while True:
        dh = delta_h(epsilon)
        if direction == 1 and not dh > log_target:
            break
        if direction == -1 and not dh < log_target:
            break
        epsilon = 2.0 * epsilon if direction == 1 else 0.5 * epsilon
        if epsilon > 1e7 or epsilon < 1e-12:
            logger.warning(f"No se encontró un paso razonable; se usa epsilon={epsilon:g}")
            break
    return epsilon


class DualAveraging:
    """Adaptación del paso por dual averaging (gamma=0.05, t0=10, kappa=0.75)"""

    def __init__(self, epsilon: float, delta: float, gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75):
        self.delta = delta
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.restart(epsilon)

    def restart(self, epsilon: float):
        self.mu = np.log(10.0 * epsilon)
        self.counter = 0
        self.h_bar = 0.0
        self.x_bar = 0.0

    def update(self, accept_stat: float) -> float:
        self.counter += 1
        accept_stat = min(1.0, accept_stat)
        eta = 1.0 / (self.counter + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.delta - accept_stat)
        x = self.mu - np.sqrt(self.counter) / self.gamma * self.h_bar
        x_eta = self.counter ** (-self.kappa)
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x
        return float(np.exp(x))

    def final_epsilon(self) -> float:
        return float(np.exp(self.x_bar))


class WindowedMetric:
    """
    Estimación de la métrica diagonal en ventanas lentas de tamaño creciente

    Ventana rápida inicial de 75 iteraciones, ventanas lentas 25·2^j y ventana
    rápida final de 50. Con menos de 150 iteraciones de warmup se reparten
    15% / 75% / 10%.
    """

    def __init__(self, n_params: int, warmup: int):
        self.warmup = warmup
        self.inv_metric = np.ones(n_params)
        self.enabled = warmup >= 20
        if INIT_BUFFER + BASE_WINDOW + TERM_BUFFER > warmup:
            self.init_buffer = int(0.15 * warmup)
            self.term_buffer = int(0.1 * warmup)
            self.window_size = warmup - self.init_buffer - self.term_buffer
        else:
            self.init_buffer = INIT_BUFFER
            self.term_buffer = TERM_BUFFER
            self.window_size = BASE_WINDOW
        self.next_window = self.init_buffer + self.window_size - 1
        self.counter = 0
        self._reset_estimator(n_params)

    def _reset_estimator(self, n_params: int):
        self.n = 0
        self.mean = np.zeros(n_params)
        self.m2 = np.zeros(n_params)

    def _in_window(self) -> bool:
        return self.init_buffer <= self.counter < self.warmup - self.term_buffer

    def _window_end(self) -> bool:
        return self.counter == self.next_window and self.counter != self.warmup

    def _compute_next_window(self):
        last = self.warmup - self.term_buffer - 1
        if self.next_window == last:
            return
        self.window_size *= 2
        self.next_window = self.counter + self.window_size
        if self.next_window != last and self.next_window + 2 * self.window_size >= self.warmup - self.term_buffer:
            self.next_window = last

    def learn(self, theta: np.ndarray) -> bool:
        """
        Acumula theta (Welford) y cierra la ventana cuando corresponde

        Returns:
            True si la métrica cambió al final de una ventana lenta
        """
        if not self.enabled:
            self.counter += 1
            return False
        if self._in_window():
            self.n += 1
            delta = theta - self.mean
            self.mean += delta / self.n
            self.m2 += delta * (theta - self.mean)
        if self._window_end():
            self._compute_next_window()
            n = self.n
            variance = self.m2 / (n - 1) if n > 1 else np.ones_like(self.m2)
            # Regularización hacia 1e-3
            self.inv_metric = (n / (n + 5.0)) * variance + 1e-3 * (5.0 / (n + 5.0))
            logger.debug(f"Fin de ventana de adaptación en la iteración {self.counter} ({n} muestras)")
            self._reset_estimator(theta.size)
            self.counter += 1
            return True
        self.counter += 1
        return False


class ChainOutput(NamedTuple):
    unconstrained: np.ndarray
    divergences: int
    treedepth_hits: int
    step_size: float
    inv_metric: np.ndarray
    accept_stat: float


def initial_point(value_and_grad_fn, n_params: int, rng: np.random.Generator, label: str):
    """Punto inicial ~ Uniforme(-2, 2) con densidad y gradiente finitos"""
    for attempt in range(1, INIT_ATTEMPTS + 1):
        theta = rng.uniform(-INIT_RADIUS, INIT_RADIUS, size=n_params)
        L, grad = value_and_grad_fn(theta)
        if np.isfinite(L) and np.all(np.isfinite(grad)):
            if attempt > 1:
                logger.debug(f"Inicialización válida tras {attempt} intentos")
            return theta, L, grad
    raise SamplerInitError(
        f"no se encontró un punto inicial con densidad finita para {label} tras {INIT_ATTEMPTS} intentos"
    )


def run_chain(spec, y: TimeSeries, cfg: SamplerConfig, chain: int, seed_seq: np.random.SeedSequence) -> ChainOutput:
    """
    Ejecuta una cadena completa: warmup con adaptación y fase de muestreo

    Returns:
        ChainOutput con las iteraciones posteriores al warmup
    """
    rng = np.random.default_rng(seed_seq)
    fn = value_and_grad(spec, y)
    n_params = len(spec.layout)
    theta, L, grad = initial_point(fn, n_params, rng, spec.label())

    metric = WindowedMetric(n_params, cfg.warmup)
    epsilon = find_reasonable_epsilon(fn, theta, L, grad, 1.0, metric.inv_metric, rng)
    adaptation = DualAveraging(epsilon, cfg.adapt_delta)
    logger.info(f"Cadena {chain + 1}: inicio ({cfg.warmup} de warmup, {cfg.n_samples} de muestreo)")

    samples = np.empty((cfg.n_samples, n_params))
    divergences, treedepth_hits, accept_total = 0, 0, 0.0
    for iteration in range(cfg.iter):
        warming = iteration < cfg.warmup
        step = nuts_transition(fn, theta, L, grad, epsilon, metric.inv_metric, cfg.max_treedepth, rng)
        theta, L, grad = step.theta, step.L, step.grad

        if warming:
            epsilon = adaptation.update(step.accept_stat)
            if metric.learn(theta):
                epsilon = find_reasonable_epsilon(fn, theta, L, grad, epsilon, metric.inv_metric, rng)
                adaptation.restart(epsilon)
            if iteration == cfg.warmup - 1:
                epsilon = adaptation.final_epsilon()
            continue

        k = iteration - cfg.warmup
        samples[k] = theta
        accept_total += step.accept_stat
        divergences += int(step.divergent)
        treedepth_hits += int(step.depth >= cfg.max_treedepth)

    logger.info(
        f"Cadena {chain + 1}: fin (paso {epsilon:.4g}, divergencias {divergences}, "
        f"profundidad máxima alcanzada {treedepth_hits} veces)"
    )
    return ChainOutput(
        unconstrained=samples,
        divergences=divergences,
        treedepth_hits=treedepth_hits,
        step_size=float(epsilon),
        inv_metric=metric.inv_metric,
        accept_stat=accept_total / max(cfg.n_samples, 1),
    )


def _pointwise(spec, y: TimeSeries, flat_u: np.ndarray):
    pointwise, lp = [], []
    for u in flat_u:
        result = spec.log_posterior(y, u)
        pointwise.append(result.pointwise_loglik)
        lp.append(float(result.log_posterior))
    return np.array(pointwise), np.array(lp)


def assemble_fit(spec, y: TimeSeries, unconstrained: np.ndarray, cfg: SamplerConfig,
                 report: SamplerReport, name: str = "model") -> FitResult:
    """Construye el FitResult recalculando valores restringidos, lp__ y log-verosimilitud puntual"""
    unconstrained = np.asarray(unconstrained, dtype=float)
    chains, iters, n_params = unconstrained.shape
    pointwise, lp = _pointwise(spec, y, unconstrained.reshape(chains * iters, n_params))
    draws = DrawsMatrix(
        draws=constrain_matrix(spec.layout, unconstrained),
        unconstrained=unconstrained,
        log_posterior=lp.reshape(chains, iters),
        pointwise_loglik=pointwise,
        names=[entry.name for entry in spec.layout],
    )
    fit = FitResult(spec=spec, y=y, draws=draws, report=report, config=cfg, name=name)
    _check_garch_stationarity(fit)
    return fit


def fit_from_draws(spec, y: TimeSeries, draws: np.ndarray, cfg: Optional[SamplerConfig] = None,
                   name: str = "model") -> FitResult:
    """
    FitResult a partir de draws restringidos producidos externamente

    Args:
        draws: (cadenas, iteraciones, P) o (iteraciones, P) en la escala restringida
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 2:
        draws = draws[None, :, :]
    chains, iters, n_params = draws.shape
    if cfg is None:
        cfg = SamplerConfig(chains=chains, iter=iters + 1, warmup=1)
    report = SamplerReport(
        divergences=[0] * chains,
        treedepth_hits=[0] * chains,
        step_size=[float("nan")] * chains,
        metric=[[1.0] * n_params for _ in range(chains)],
        accept_stat=[float("nan")] * chains,
        sampler="external",
    )
    return assemble_fit(spec, y, unconstrain_matrix(spec.layout, draws), cfg, report, name)


def _check_garch_stationarity(fit: FitResult):
    if getattr(fit.spec, "family", None) != "garch":
        return
    names = fit.draws.names
    columns = [i for i, n in enumerate(names) if n.startswith("arch[") or n.startswith("garch[")]
    persistence = float(np.median(fit.draws.flat()[:, columns].sum(axis=1)))
    if persistence >= 1.0:
        logger.warning(
            f"{fit.spec.label()}: la suma de coeficientes ARCH+GARCH en la mediana posterior es "
            f"{persistence:.4f} >= 1 (proceso no estacionario en varianza)"
        )


def sample(spec, y: TimeSeries, cfg: Optional[SamplerConfig] = None, name: str = "model") -> FitResult:
    """
    Ajusta el modelo con NUTS

    Las cadenas usan flujos aleatorios independientes derivados de (seed, cadena)
    y se ejecutan en paralelo hasta TSBAYES_THREADS procesos.

    Args:
        spec: Especificación del modelo o densidad de prueba
        y: Serie observada
        cfg: Opciones del muestreador
        name: Nombre del ajuste en las comparaciones

    Returns:
        FitResult con draws, log-verosimilitud puntual e informe
    """
    cfg = cfg or SamplerConfig()
    spec.check_series(y)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    workers = min(settings.THREADS, cfg.chains)
    logger.info(f"Ajustando {spec.label()} con NUTS: {cfg.chains} cadenas, {cfg.iter} iteraciones, semilla {cfg.seed}")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_chain, spec, y, cfg, c, seeds[c]) for c in range(cfg.chains)]
            outputs: List[ChainOutput] = [f.result() for f in futures]
    else:
        outputs = [run_chain(spec, y, cfg, c, seeds[c]) for c in range(cfg.chains)]

    report = SamplerReport(
        divergences=[o.divergences for o in outputs],
        treedepth_hits=[o.treedepth_hits for o in outputs],
        step_size=[o.step_size for o in outputs],
        metric=[o.inv_metric.tolist() for o in outputs],
        accept_stat=[o.accept_stat for o in outputs],
    )
    if report.total_divergences:
        logger.warning(f"{report.total_divergences} transiciones divergentes tras el warmup")
    if sum(report.treedepth_hits):
        logger.warning(f"{sum(report.treedepth_hits)} iteraciones alcanzaron max_treedepth={cfg.max_treedepth}")

    unconstrained = np.stack([o.unconstrained for o in outputs])
    return assemble_fit(spec, y, unconstrained, cfg, report, name)
