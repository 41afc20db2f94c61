import sys, time
import numpy as np

sys.path.insert(0, "/root/pkg/tests")
from sparca.cfcurve import cf_curve
from sparca.horn import HornParams
from sparca.pipeline import fit
from sparca.evalkit import (PcaBaseline, stratified_split, noise_robustness,
                            l1_logreg_fit, l1_logreg_predict, reduced_values)


def quick(X, y, seed=0, lam=0.1, k=None, sigmas=(0.0, 0.25, 0.5, 1.0, 2.0, 4.0)):
    embed, train, test = stratified_split(y, (2000, 4000, 1000), seed=seed)
    horn = HornParams(seed=seed)
    t0 = time.perf_counter()
    if k is None:
        curve = cf_curve(X[embed], horn_params=horn)
        k = curve.selected
    sparca = fit(X[embed], n_clusters=k, horn_params=horn)
    pca = PcaBaseline.fit(X[embed], horn_params=horn)
    t1 = time.perf_counter()
    clfs, accs = [], {}
    for name, dr in (("sparca", sparca), ("pca", pca)):
        clf = l1_logreg_fit(reduced_values(dr, X[train]), y[train], lam)
        pred, _ = l1_logreg_predict(clf, reduced_values(dr, X[test]))
        accs[name] = round(float(np.mean(pred == y[test])), 3)
        clfs.append(clf)
    gnorms = np.sqrt(np.asarray(sparca.projection.multiply(sparca.projection).sum(axis=0)).ravel())
    print(f"  k={k} p={sparca.n_reduced} pca_h={pca.n_reduced} acc={accs} "
          f"({t1-t0:.0f}s), |w| med={np.median(gnorms):.2f} max={gnorms.max():.2f}", flush=True)
    wins = 0
    for ns in range(5):
        tbl = noise_robustness([sparca, pca], clfs, X[test], y[test], list(sigmas), seed=ns)
        informative = np.flatnonzero(tbl.max(axis=1) > 0.2)
        lvl = int(informative[-1])
        win = tbl[lvl, 0] >= tbl[lvl, 1] - 0.01
        wins += win
        if ns == 0:
            print("  noise0 sparca:", np.round(tbl[:, 0], 3).tolist(), flush=True)
            print("  noise0 pca   :", np.round(tbl[:, 1], 3).tolist(), flush=True)
    print(f"  direction hits: {wins}/5", flush=True)
    return accs, wins
