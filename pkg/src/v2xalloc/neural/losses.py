"""Combined dual-head loss: cross-entropy plus weighted power regressions.

Total loss is L_cls + alpha * L_reg(C-UE powers) + beta * L_reg(V-UE powers)
with L_reg the squared Euclidean distance over the batch divided by the
batch size and L_cls the categorical cross-entropy (natural log, batch
mean). Predicted class probabilities are clamped to >= 1e-12 before the log.
"""

import numpy as np

PROB_FLOOR = 1e-12


def dual_head_loss(class_probs, onehot, pc_pred, pc_target, pv_pred, pv_target,
                   alpha=0.1, beta=0.1):
    """Returns (l_total, l_cls, l_reg_c, l_reg_v) for one batch."""
    if class_probs.shape != onehot.shape:
        raise ValueError("class probabilities and one-hot targets disagree in shape")
    k = class_probs.shape[0]
    safe = np.maximum(class_probs, PROB_FLOOR)
    l_cls = float(-np.sum(onehot * np.log(safe)) / k)
    l_reg_c = float(np.sum((pc_pred - pc_target) ** 2) / k)
    l_reg_v = float(np.sum((pv_pred - pv_target) ** 2) / k)
    l_total = l_cls + alpha * l_reg_c + beta * l_reg_v
    return l_total, l_cls, l_reg_c, l_reg_v


def loss_gradients(class_probs, onehot, pc_pred, pc_target, pv_pred, pv_target,
                   alpha=0.1, beta=0.1):
    """Gradients of the total loss w.r.t. class logits and both power heads.

    The class-head gradient uses the softmax/cross-entropy identity
    (probs - onehot) / K, which is exact for the unclamped loss.
    """
    k = class_probs.shape[0]
    d_logits = (class_probs - onehot) / k
    d_pc = alpha * 2.0 * (pc_pred - pc_target) / k
    d_pv = beta * 2.0 * (pv_pred - pv_target) / k
    return d_logits, d_pc, d_pv
