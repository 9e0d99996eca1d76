#include "windts/tensor.hpp"

#include <unordered_set>

namespace windts::ad {

std::vector<Tensor> backward(const Tensor& loss) {
  WINDTS_REQUIRE(loss.defined(), "backward: undefined loss tensor");
  WINDTS_REQUIRE(loss.numel() == 1, "backward: loss must be scalar, got {}",
                 shape_str(loss.shape()));
  TensorImpl* root = loss.impl().get();
  if (root->consumed) fail("backward: graph already consumed by a previous backward");
  if (root->parents.empty()) {
    // Constants only: nothing was recorded, nothing to differentiate.
    if (!root->requires_grad) return {};
    fail("backward: loss has no recorded graph");
  }

  // Iterative post-order DFS; a node's parents are fully ordered before the
  // node itself, so the reversed list is a reverse-topological schedule.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  struct Frame {
    TensorImpl* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  seen.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorImpl* p = f.node->parents[f.next_parent++].get();
      if (seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  for (TensorImpl* n : order) {
    if (n->backward_fn && n->consumed) {
      fail("backward: graph already consumed by a previous backward");
    }
  }

  // Leaves in deterministic traversal order, collected through the
  // shared_ptrs their children hold.
  std::vector<Tensor> leaves;
  std::unordered_set<TensorImpl*> leaf_seen;
  for (TensorImpl* n : order) {
    for (const auto& p : n->parents) {
      if (p->parents.empty() && p->requires_grad && leaf_seen.insert(p.get()).second) {
        leaves.emplace_back(p);
      }
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* n = *it;
    if (n->backward_fn) {
      if (!n->grad.empty()) n->backward_fn(*n);
      n->consumed = true;
      n->backward_fn = nullptr;
    }
  }
  root->consumed = true;

  for (Tensor& leaf : leaves) leaf.impl()->ensure_grad();
  return leaves;
}

}  // namespace windts::ad
