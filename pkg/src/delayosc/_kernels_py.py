"""Pure-Python stepping loop; same contract as the compiled ``advance``."""
import math


def advance(X, J, F, W, m):
    x = X.tolist()
    jj = J.tolist()
    ff = F.tolist()
    ww = W.tolist()
    failed = -1
    for n in range(len(jj)):
        k = m + n
        xn = x[k]
        (j0, j1), (f0, f1), (w0, w1) = jj[n], ff[n], ww[n]
        guess = xn
        sweeps = 2 if (j0 >= k or j1 >= k) else 1
        for _ in range(sweeps):
            if j0 < k:
                v0 = x[j0] + f0 * (x[j0 + 1] - x[j0])
            else:
                v0 = xn + f0 * (guess - xn)
            if j1 < k:
                v1 = x[j1] + f1 * (x[j1 + 1] - x[j1])
            else:
                v1 = xn + f1 * (guess - xn)
            guess = xn - (w0 * v0 + w1 * v1)
        if not math.isfinite(guess):
            failed = n
            break
        x[k + 1] = guess
    X[:] = x
    return failed
