#pragma once

// Eager tape. Every op computes its value immediately and appends an
// OpRecord whose forward closure can replay the computation from the
// recorded inputs; backward walks the records in reverse. Tensors are
// immutable once a node holds them.

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cmpc/ops.hpp"
#include "cmpc/params.hpp"

namespace cmpc {

template <class T>
class Graph {
   public:
    using GradMap = std::map<std::string, Tensor<T>>;

    struct OpRecord {
        const char* op;
        std::vector<int> in;
        int out;
        std::function<Tensor<T>(const std::vector<const Tensor<T>*>&)> forward;
        std::function<std::vector<Tensor<T>>(const Tensor<T>& d_out, const std::vector<const Tensor<T>*>& in,
                                             const Tensor<T>& out)>
            backward;
    };

    explicit Graph(const ParamStore<T>* params = nullptr) : params_(params) {}

    const ParamStore<T>* params() const { return params_; }

    int constant(Tensor<T> v) { return add_node(std::move(v), false, {}); }

    int param(const std::string& name) {
        if (!params_) throw std::logic_error("Graph::param: no ParamStore bound");
        return add_node(params_->at(name), true, name);
    }

    const Tensor<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    std::size_t num_records() const { return records_.size(); }

    // ----- op builders ------------------------------------------------------

    int matmul(int a, int b) {
        return apply("matmul", {a, b}, [](const auto& in) { return cmpc::matmul(*in[0], *in[1]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> da, db;
                         cmpc::matmul_backward(d, *in[0], *in[1], da, db);
                         std::vector<Tensor<T>> g;
                         g.push_back(std::move(da));
                         g.push_back(std::move(db));
                         return g;
                     });
    }

    int transpose(int x) {
        return apply("transpose", {x}, [](const auto& in) { return cmpc::transpose(*in[0]); },
                     [](const Tensor<T>& d, const auto&, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{cmpc::transpose(d)};
                     });
    }

    int add(int a, int b) {
        return apply("add", {a, b}, [](const auto& in) { return cmpc::add(*in[0], *in[1]); },
                     [](const Tensor<T>& d, const auto&, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{d, d};
                     });
    }

    int scale(int x, T c) {
        return apply("scale", {x}, [c](const auto& in) { return cmpc::scale(*in[0], c); },
                     [c](const Tensor<T>& d, const auto&, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{cmpc::scale(d, c)};
                     });
    }

    int add_rowvec(int x, int v) {
        return apply("add_rowvec", {x, v}, [](const auto& in) { return cmpc::add_rowvec(*in[0], *in[1]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         std::vector<Tensor<T>> g;
                         g.push_back(d);
                         g.push_back(cmpc::add_rowvec_backward_v(d, in[1]->shape));
                         return g;
                     });
    }

    int hadamard(int a, int b) {
        return apply("hadamard", {a, b}, [](const auto& in) { return cmpc::hadamard(*in[0], *in[1]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> da, db;
                         cmpc::hadamard_backward(d, *in[0], *in[1], da, db);
                         std::vector<Tensor<T>> g;
                         g.push_back(std::move(da));
                         g.push_back(std::move(db));
                         return g;
                     });
    }

    int sigmoid(int x) {
        return apply("sigmoid", {x}, [](const auto& in) { return cmpc::sigmoid(*in[0]); },
                     [](const Tensor<T>& d, const auto&, const Tensor<T>& y) {
                         return std::vector<Tensor<T>>{cmpc::sigmoid_backward(d, y)};
                     });
    }

    int tanh_op(int x) {
        return apply("tanh", {x}, [](const auto& in) { return cmpc::tanh_map(*in[0]); },
                     [](const Tensor<T>& d, const auto&, const Tensor<T>& y) {
                         return std::vector<Tensor<T>>{cmpc::tanh_backward(d, y)};
                     });
    }

    int softmax_rows(int x) {
        return apply("softmax_rows", {x}, [](const auto& in) { return cmpc::softmax_rows(*in[0]); },
                     [](const Tensor<T>& d, const auto&, const Tensor<T>& y) {
                         return std::vector<Tensor<T>>{cmpc::softmax_rows_backward(d, y)};
                     });
    }

    int concat_last(std::vector<int> parts) {
        std::vector<std::int64_t> widths;
        for (int p : parts) {
            const auto& s = value(p).shape;
            widths.push_back(s[s.size() - 1]);
        }
        return apply("concat_last", std::move(parts),
                     [](const auto& in) { return cmpc::concat_last<T>(in); },
                     [widths](const Tensor<T>& d, const auto&, const Tensor<T>&) {
                         std::vector<Tensor<T>> g;
                         std::int64_t off = 0;
                         for (auto w : widths) {
                             g.push_back(cmpc::slice_last(d, off, off + w));
                             off += w;
                         }
                         return g;
                     });
    }

    int slice_last(int x, std::int64_t from, std::int64_t to) {
        return apply("slice_last", {x},
                     [from, to](const auto& in) { return cmpc::slice_last(*in[0], from, to); },
                     [from, to](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> dx(in[0]->shape);
                         const std::int64_t last = dx.shape[dx.shape.size() - 1];
                         const std::int64_t w = to - from, rows = dx.size() / last;
                         for (std::int64_t i = 0; i < rows; ++i)
                             for (std::int64_t j = 0; j < w; ++j) dx[i * last + from + j] = d[i * w + j];
                         return std::vector<Tensor<T>>{std::move(dx)};
                     });
    }

    int concat_rows(std::vector<int> parts) {
        std::vector<std::int64_t> heights;
        for (int p : parts) heights.push_back(value(p).shape[0]);
        return apply("concat_rows", std::move(parts),
                     [](const auto& in) { return cmpc::concat_rows<T>(in); },
                     [heights](const Tensor<T>& d, const auto&, const Tensor<T>&) {
                         std::vector<Tensor<T>> g;
                         std::int64_t off = 0;
                         for (auto h : heights) {
                             g.push_back(cmpc::slice_rows(d, off, off + h));
                             off += h;
                         }
                         return g;
                     });
    }

    int conv1x1(int x, int w, int b) {
        return apply("conv1x1", {x, w, b},
                     [](const auto& in) { return cmpc::conv1x1(*in[0], *in[1], *in[2]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> dx, dw, db;
                         cmpc::conv1x1_backward(d, *in[0], *in[1], dx, dw, db);
                         std::vector<Tensor<T>> g;
                         g.push_back(std::move(dx));
                         g.push_back(std::move(dw));
                         g.push_back(std::move(db));
                         return g;
                     });
    }

    int conv2d_same(int x, int w, int b) {
        return apply("conv2d_same", {x, w, b},
                     [](const auto& in) { return cmpc::conv2d_same(*in[0], *in[1], *in[2]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> dx, dw, db;
                         cmpc::conv2d_same_backward(d, *in[0], *in[1], dx, dw, db);
                         std::vector<Tensor<T>> g;
                         g.push_back(std::move(dx));
                         g.push_back(std::move(dw));
                         g.push_back(std::move(db));
                         return g;
                     });
    }

    int bilinear_resize(int x, std::int64_t ho, std::int64_t wo) {
        return apply("bilinear_resize", {x},
                     [ho, wo](const auto& in) { return cmpc::bilinear_resize(*in[0], ho, wo); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{cmpc::bilinear_resize_backward(d, in[0]->shape)};
                     });
    }

    int embed_rows(int table, std::vector<std::int64_t> ids) {
        return apply("embed_rows", {table},
                     [ids](const auto& in) { return cmpc::embed_rows(*in[0], ids); },
                     [ids](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{cmpc::embed_rows_backward(d, in[0]->shape, ids)};
                     });
    }

    int select_frame(int x, std::int64_t k) {
        return apply("select_frame", {x},
                     [k](const auto& in) { return cmpc::select_frame(*in[0], k); },
                     [k](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         Tensor<T> dx(in[0]->shape);
                         const std::int64_t stride = dx.size() / dx.shape[0];
                         std::copy(d.data.begin(), d.data.end(),
                                   dx.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
                         return std::vector<Tensor<T>>{std::move(dx)};
                     });
    }

    int broadcast_spatial(int v, std::int64_t h, std::int64_t w) {
        return apply("broadcast_spatial", {v},
                     [h, w](const auto& in) { return cmpc::broadcast_spatial(*in[0], h, w); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{cmpc::broadcast_spatial_backward(d, in[0]->shape)};
                     });
    }

    int sum_all(int x) {
        return apply("sum_all", {x}, [](const auto& in) { return cmpc::sum_all(*in[0]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{Tensor<T>::full(in[0]->shape, d[0])};
                     });
    }

    int mean_all(int x) {
        return apply("mean_all", {x}, [](const auto& in) { return cmpc::mean_all(*in[0]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{
                             Tensor<T>::full(in[0]->shape, d[0] / static_cast<T>(in[0]->size()))};
                     });
    }

    int bce_with_logits_mean(int z, int targets) {
        return apply("bce_with_logits_mean", {z, targets},
                     [](const auto& in) { return cmpc::bce_with_logits_mean(*in[0], *in[1]); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         std::vector<Tensor<T>> g;
                         g.push_back(cmpc::bce_with_logits_mean_backward(d, *in[0], *in[1]));
                         g.push_back(Tensor<T>(in[1]->shape));
                         return g;
                     });
    }

    int reshape(int x, Shape s) {
        return apply("reshape", {x},
                     [s](const auto& in) { return in[0]->reshaped(s); },
                     [](const Tensor<T>& d, const auto& in, const Tensor<T>&) {
                         return std::vector<Tensor<T>>{d.reshaped(in[0]->shape)};
                     });
    }

    // ----- differentiation ---------------------------------------------------

    /// Reverse pass from a scalar node. Returns one gradient per parameter
    /// name; parameters the loss does not reach get zeros.
    GradMap backward(int loss) const {
        if (value(loss).size() != 1)
            throw std::invalid_argument("Graph::backward: loss must be scalar, got " + shape_str(value(loss).shape));
        std::vector<Tensor<T>> grads(nodes_.size());
        grads[static_cast<std::size_t>(loss)] = Tensor<T>::full(value(loss).shape, T(1));
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            const auto& out_grad = grads[static_cast<std::size_t>(it->out)];
            if (out_grad.data.empty()) continue;
            std::vector<const Tensor<T>*> ins;
            ins.reserve(it->in.size());
            bool any = false;
            for (int id : it->in) {
                ins.push_back(&value(id));
                any = any || nodes_[static_cast<std::size_t>(id)].needs_grad;
            }
            if (!any) continue;
            auto in_grads = it->backward(out_grad, ins, value(it->out));
            for (std::size_t i = 0; i < it->in.size(); ++i) {
                const auto id = static_cast<std::size_t>(it->in[i]);
                if (!nodes_[id].needs_grad) continue;
                if (grads[id].data.empty())
                    grads[id] = std::move(in_grads[i]);
                else
                    grads[id] = cmpc::add(grads[id], in_grads[i]);
            }
        }
        GradMap out;
        if (params_)
            for (const auto& [name, tensor] : params_->tensors()) out.emplace(name, Tensor<T>(tensor.shape));
        for (std::size_t id = 0; id < nodes_.size(); ++id) {
            const auto& node = nodes_[id];
            if (node.param_name.empty() || grads[id].data.empty()) continue;
            auto it = out.find(node.param_name);
            if (it == out.end())
                out.emplace(node.param_name, grads[id]);
            else
                it->second = cmpc::add(it->second, grads[id]);
        }
        return out;
    }

    /// OpRecord invariant: recomputing each record from its recorded inputs
    /// must reproduce the recorded output bit-exactly.
    bool replay_all() const {
        for (const auto& rec : records_) {
            std::vector<const Tensor<T>*> ins;
            for (int id : rec.in) ins.push_back(&value(id));
            if (!rec.forward(ins).bit_equal(value(rec.out))) return false;
        }
        return true;
    }

   private:
    struct Node {
        Tensor<T> value;
        bool needs_grad = false;
        std::string param_name;
    };

    int add_node(Tensor<T> v, bool needs_grad, std::string param_name) {
        nodes_.push_back(Node{std::move(v), needs_grad, std::move(param_name)});
        return static_cast<int>(nodes_.size()) - 1;
    }

    template <class F, class B>
    int apply(const char* op, std::vector<int> in, F&& fwd, B&& bwd) {
        std::vector<const Tensor<T>*> ins;
        ins.reserve(in.size());
        bool needs = false;
        for (int id : in) {
            ins.push_back(&value(id));
            needs = needs || nodes_[static_cast<std::size_t>(id)].needs_grad;
        }
        Tensor<T> out_value = fwd(ins);
        const int out = add_node(std::move(out_value), needs, {});
        records_.push_back(OpRecord{op, std::move(in), out, std::forward<F>(fwd), std::forward<B>(bwd)});
        return out;
    }

    const ParamStore<T>* params_;
    std::deque<Node> nodes_;  // deque: value() references stay valid as ops append
    std::vector<OpRecord> records_;
};

}  // namespace cmpc
