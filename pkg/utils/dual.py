# utils/dual.py - Números duales para diferenciación automática en modo directo
#
# Un Dual guarda el valor primal y las P tangentes a la vez (duales agrupados):
# val tiene forma S y tan tiene forma S + (P,). Las funciones de este módulo
# aceptan indistintamente floats/ndarrays o Duals, de modo que el mismo código
# de las recursiones calcula el valor y su gradiente.

import numpy as np
from scipy import signal, special

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_2 = float(np.log(2.0))


def _col(v):
    return np.asarray(v)[..., None]


class Dual:
    """Número dual con un vector de tangentes por cada valor primal"""

    __slots__ = ("val", "tan")
    # ndarray cede las operaciones binarias a los métodos reflejados
    __array_ufunc__ = None

    def __init__(self, val, tan):
        if np.ndim(tan) != np.ndim(val) + 1:
            tan = np.broadcast_to(tan, np.shape(val) + np.shape(tan)[-1:])
        self.val = val
        self.tan = tan

    def __repr__(self):
        return f"Dual({self.val!r}, {self.tan!r})"

    @property
    def shape(self):
        return np.shape(self.val)

    @property
    def ndim(self):
        return np.ndim(self.val)

    def __len__(self):
        return len(self.val)

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.tan[idx])

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.tan + other.tan)
        return Dual(self.val + other, self.tan)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val - other.val, self.tan - other.tan)
        return Dual(self.val - other, self.tan)

    def __rsub__(self, other):
        return Dual(other - self.val, -self.tan)

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val, self.tan * _col(other.val) + other.tan * _col(self.val))
        return Dual(self.val * other, self.tan * _col(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            val = self.val / other.val
            return Dual(val, (self.tan - _col(val) * other.tan) / _col(other.val))
        return Dual(self.val / other, self.tan / _col(other))

    def __rtruediv__(self, other):
        val = other / self.val
        return Dual(val, -_col(val / self.val) * self.tan)

    def __pow__(self, power):
        # Solo exponentes constantes
        return Dual(self.val ** power, self.tan * _col(power * self.val ** (power - 1)))

    # Comparaciones sobre el valor primal (comprobación de soportes)
    def __lt__(self, other):
        return self.val < value(other)

    def __le__(self, other):
        return self.val <= value(other)

    def __gt__(self, other):
        return self.val > value(other)

    def __ge__(self, other):
        return self.val >= value(other)


def is_dual(x):
    return isinstance(x, Dual)


def value(x):
    """Valor primal de un Dual (o el propio valor si no lo es)"""
    return x.val if isinstance(x, Dual) else x


def variables(u):
    """Siembra las variables independientes: tangente identidad de tamaño P"""
    u = np.asarray(u, dtype=float)
    return Dual(u.copy(), np.eye(u.size))


def _unary(x, f, df):
    if isinstance(x, Dual):
        return Dual(f(x.val), x.tan * _col(df(x.val)))
    return f(x)


def exp(x):
    if isinstance(x, Dual):
        val = np.exp(x.val)
        return Dual(val, x.tan * _col(val))
    return np.exp(x)


def log(x):
    return _unary(x, np.log, lambda v: 1.0 / v)


def log1p(x):
    return _unary(x, np.log1p, lambda v: 1.0 / (1.0 + v))


def square(x):
    if isinstance(x, Dual):
        return Dual(np.square(x.val), x.tan * _col(2.0 * x.val))
    return np.square(x)


def tanh(x):
    if isinstance(x, Dual):
        val = np.tanh(x.val)
        return Dual(val, x.tan * _col(1.0 - val * val))
    return np.tanh(x)


def expit(x):
    if isinstance(x, Dual):
        val = special.expit(x.val)
        return Dual(val, x.tan * _col(val * (1.0 - val)))
    return special.expit(x)


def softplus(x):
    """log(1 + e^x) estable"""
    return _unary(x, lambda v: np.logaddexp(0.0, v), special.expit)


def gammaln(x):
    return _unary(x, special.gammaln, special.digamma)


def total(x):
    """Suma de un vector (Dual o no)"""
    if isinstance(x, Dual):
        if x.ndim == 0:
            return x
        return Dual(np.sum(x.val), x.tan.sum(axis=0))
    return np.sum(x)


def stack(items):
    """Apila escalares en un vector; el resultado es Dual si alguno lo es"""
    duals = [i for i in items if isinstance(i, Dual)]
    if not duals:
        return np.array(items, dtype=float)
    zeros = np.zeros(duals[0].tan.shape[-1])
    val = np.array([value(i) for i in items], dtype=float)
    tan = np.stack([i.tan if isinstance(i, Dual) else zeros for i in items])
    return Dual(val, tan)


def matvec(matrix, x):
    """Producto matriz constante por vector"""
    if isinstance(x, Dual):
        return Dual(matrix @ x.val, matrix @ x.tan)
    return matrix @ x


def shift(x, k, fill=0.0):
    """Retardo k: out[t] = x[t-k] y `fill` para t < k"""
    n = len(x)
    k = min(k, n)
    if isinstance(x, Dual):
        val = np.concatenate([np.full(k, fill, dtype=float), x.val[:n - k]])
        tan = np.concatenate([np.zeros((k, x.tan.shape[-1])), x.tan[:n - k]])
        return Dual(val, tan)
    return np.concatenate([np.full(k, fill, dtype=float), np.asarray(x, dtype=float)[:n - k]])


def width(*items):
    """Número de tangentes P del primer Dual encontrado (0 si no hay ninguno)"""
    for item in items:
        if isinstance(item, Dual):
            return item.tan.shape[-1]
    return 0


def recursive_filter(x, lags, coefs):
    """
    Filtro recursivo y_t = x_t + Σ_k c_k y_{t-k} con condiciones iniciales nulas

    El valor se calcula con scipy.signal.lfilter. Las tangentes cumplen la
    misma recursión con entrada dx_t + Σ_k dc_k y_{t-k}, así que también se
    obtienen con un único lfilter a lo largo del eje temporal.

    Args:
        x: Vector de entrada (ndarray o Dual)
        lags: Retardos k >= 1
        coefs: Coeficientes c_k (float o Dual escalar), uno por retardo
    """
    lags = list(lags)
    if not lags:
        return x
    a = np.zeros(max(lags) + 1)
    a[0] = 1.0
    for lag, c in zip(lags, coefs):
        a[lag] -= value(c)
    y = signal.lfilter([1.0], a, np.asarray(value(x), dtype=float))

    p = width(x, *coefs)
    if p == 0:
        return y
    drive = np.array(x.tan, dtype=float) if isinstance(x, Dual) else np.zeros((y.size, p))
    for lag, c in zip(lags, coefs):
        if isinstance(c, Dual):
            drive = drive + shift(y, lag)[:, None] * c.tan[None, :]
    return Dual(y, signal.lfilter([1.0], a, drive, axis=0))
