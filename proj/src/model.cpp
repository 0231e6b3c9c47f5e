#include "vulnloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

namespace {

int gate_count(CellKind cell) { return cell == CellKind::Gru ? 3 : 4; }

double sigmoid(double x) {
    if (x >= 0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Vector sigmoid_v(const Vector& x) {
    Vector out(x.size());
    for (int i = 0; i < x.size(); ++i)
        out(i) = sigmoid(x(i));
    return out;
}

Vector tanh_v(const Vector& x) {
    return x.array().tanh().matrix();
}

} // namespace

ModelParams ModelParams::init(const ModelHyper& hyper, std::uint64_t seed) {
    ModelParams p;
    p.hyper = hyper;
    Rng rng = Rng(seed).derive("model-init");
    auto fill = [&](Matrix& m, int rows, int cols) {
        double r = 1.0 / std::sqrt(static_cast<double>(std::max(1, cols)));
        m.resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                m(i, j) = rng.uniform(-r, r);
    };
    int gates = gate_count(hyper.cell);
    for (int layer = 0; layer < hyper.layers; ++layer) {
        int in = layer == 0 ? hyper.input_dim : 2 * hyper.hidden;
        for (int dir = 0; dir < 2; ++dir) {
            CellParams cell;
            cell.w.resize(gates);
            cell.u.resize(gates);
            cell.b.resize(gates);
            for (int g = 0; g < gates; ++g) {
                fill(cell.w[g], hyper.hidden, in);
                fill(cell.u[g], hyper.hidden, hyper.hidden);
                cell.b[g] = Vector::Zero(hyper.hidden);
            }
            p.cells.push_back(std::move(cell));
        }
    }
    fill(p.dense_w, hyper.dense_dim, 2 * hyper.hidden);
    p.dense_b = Vector::Zero(hyper.dense_dim);
    Matrix aw;
    fill(aw, 1, hyper.dense_dim);
    p.act_w = aw.row(0).transpose();
    p.act_b = 0.0;
    return p;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z;
    z.hyper = hyper;
    for (const auto& cell : cells) {
        CellParams zc;
        for (const auto& m : cell.w)
            zc.w.push_back(Matrix::Zero(m.rows(), m.cols()));
        for (const auto& m : cell.u)
            zc.u.push_back(Matrix::Zero(m.rows(), m.cols()));
        for (const auto& v : cell.b)
            zc.b.push_back(Vector::Zero(v.size()));
        z.cells.push_back(std::move(zc));
    }
    z.dense_w = Matrix::Zero(dense_w.rows(), dense_w.cols());
    z.dense_b = Vector::Zero(dense_b.size());
    z.act_w = Vector::Zero(act_w.size());
    z.act_b = 0.0;
    return z;
}

void ModelParams::for_each(const std::function<void(double&)>& fn) {
    for (auto& cell : cells) {
        for (auto& m : cell.w)
            for (int i = 0; i < m.size(); ++i)
                fn(m.data()[i]);
        for (auto& m : cell.u)
            for (int i = 0; i < m.size(); ++i)
                fn(m.data()[i]);
        for (auto& v : cell.b)
            for (int i = 0; i < v.size(); ++i)
                fn(v.data()[i]);
    }
    for (int i = 0; i < dense_w.size(); ++i)
        fn(dense_w.data()[i]);
    for (int i = 0; i < dense_b.size(); ++i)
        fn(dense_b.data()[i]);
    for (int i = 0; i < act_w.size(); ++i)
        fn(act_w.data()[i]);
    fn(act_b);
}

void ModelParams::for_each_pair(ModelParams& other,
                                const std::function<void(double&, double&)>& fn) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t g = 0; g < cells[c].w.size(); ++g)
            for (int i = 0; i < cells[c].w[g].size(); ++i)
                fn(cells[c].w[g].data()[i], other.cells[c].w[g].data()[i]);
        for (std::size_t g = 0; g < cells[c].u.size(); ++g)
            for (int i = 0; i < cells[c].u[g].size(); ++i)
                fn(cells[c].u[g].data()[i], other.cells[c].u[g].data()[i]);
        for (std::size_t g = 0; g < cells[c].b.size(); ++g)
            for (int i = 0; i < cells[c].b[g].size(); ++i)
                fn(cells[c].b[g].data()[i], other.cells[c].b[g].data()[i]);
    }
    for (int i = 0; i < dense_w.size(); ++i)
        fn(dense_w.data()[i], other.dense_w.data()[i]);
    for (int i = 0; i < dense_b.size(); ++i)
        fn(dense_b.data()[i], other.dense_b.data()[i]);
    for (int i = 0; i < act_w.size(); ++i)
        fn(act_w.data()[i], other.act_w.data()[i]);
    fn(act_b, other.act_b);
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    const_cast<ModelParams*>(this)->for_each([&](double&) { ++n; });
    return n;
}

namespace {

// One direction of one recurrent layer over the whole sequence.
void run_direction(const ModelParams& params, int layer, int dir, const Matrix& layer_input,
                   ForwardTrace::DirTrace& trace, Matrix& out_half) {
    const CellParams& cell = params.cells[layer * 2 + dir];
    const ModelHyper& hp = params.hyper;
    int lambda = static_cast<int>(layer_input.rows());
    bool lstm = hp.cell == CellKind::Lstm;

    trace.x.resize(lambda);
    trace.gates.resize(lambda);
    trace.h.resize(lambda);
    if (lstm) {
        trace.c.resize(lambda);
        trace.c_tanh.resize(lambda);
    }

    Vector h = Vector::Zero(hp.hidden);
    Vector c = Vector::Zero(hp.hidden);
    for (int step = 0; step < lambda; ++step) {
        int t = dir == 0 ? step : lambda - 1 - step;
        Vector x = layer_input.row(t).transpose();
        trace.x[t] = x;
        if (!lstm) {
            Vector z = sigmoid_v(cell.w[0] * x + cell.u[0] * h + cell.b[0]);
            Vector r = sigmoid_v(cell.w[1] * x + cell.u[1] * h + cell.b[1]);
            Vector hc = tanh_v(cell.w[2] * x + cell.u[2] * (r.cwiseProduct(h)) + cell.b[2]);
            Vector h_new =
                (Vector::Ones(hp.hidden) - z).cwiseProduct(h) + z.cwiseProduct(hc);
            trace.gates[t] = {z, r, hc, h}; // h = previous hidden state
            h = h_new;
        } else {
            Vector i = sigmoid_v(cell.w[0] * x + cell.u[0] * h + cell.b[0]);
            Vector f = sigmoid_v(cell.w[1] * x + cell.u[1] * h + cell.b[1]);
            Vector o = sigmoid_v(cell.w[2] * x + cell.u[2] * h + cell.b[2]);
            Vector g = tanh_v(cell.w[3] * x + cell.u[3] * h + cell.b[3]);
            Vector c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
            Vector ct = tanh_v(c_new);
            trace.gates[t] = {i, f, o, g, h, c}; // h, c = previous states
            trace.c[t] = c_new;
            trace.c_tanh[t] = ct;
            h = o.cwiseProduct(ct);
            c = c_new;
        }
        trace.h[t] = h;
        out_half.row(t).segment(dir * hp.hidden, hp.hidden) = h.transpose();
    }
}

} // namespace

ForwardTrace model_forward(const ModelParams& params, const Matrix& input, Rng* dropout_rng) {
    const ModelHyper& hp = params.hyper;
    if (input.cols() != hp.input_dim)
        throw DataError("model input has " + std::to_string(input.cols()) +
                        " columns, expected " + std::to_string(hp.input_dim));
    int lambda = static_cast<int>(input.rows());

    ForwardTrace trace;
    trace.input = input;
    trace.dirs.resize(static_cast<std::size_t>(hp.layers) * 2);
    trace.layer_inputs.resize(hp.layers);
    trace.layer_outputs.resize(hp.layers);
    bool use_dropout = dropout_rng != nullptr && hp.dropout > 0.0;
    if (use_dropout)
        trace.dropout_masks.resize(hp.layers);

    Matrix current = input;
    for (int layer = 0; layer < hp.layers; ++layer) {
        trace.layer_inputs[layer] = current;
        Matrix out = Matrix::Zero(lambda, 2 * hp.hidden);
        run_direction(params, layer, 0, current, trace.dirs[layer * 2 + 0], out);
        run_direction(params, layer, 1, current, trace.dirs[layer * 2 + 1], out);
        if (use_dropout) {
            // Inverted dropout on the layer's output rows.
            Matrix mask(lambda, 2 * hp.hidden);
            double keep = 1.0 - hp.dropout;
            for (int i = 0; i < lambda; ++i)
                for (int j = 0; j < 2 * hp.hidden; ++j)
                    mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
            trace.dropout_masks[layer] = mask;
            out = out.cwiseProduct(mask);
        }
        trace.layer_outputs[layer] = out;
        current = out;
    }

    trace.dense_pre.resize(lambda);
    trace.activations.resize(lambda);
    for (int t = 0; t < lambda; ++t) {
        Vector u = params.dense_w * current.row(t).transpose() + params.dense_b;
        trace.dense_pre[t] = u;
        trace.activations(t) = sigmoid(params.act_w.dot(u) + params.act_b);
    }
    return trace;
}

Vector multiply_layer(const Vector& activations, const Vector& mask) {
    if (activations.size() != mask.size())
        throw DataError("multiply layer: activation and mask lengths differ");
    return activations.cwiseProduct(mask);
}

std::vector<int> kmax_indices(const Vector& values, int kappa) {
    if (kappa < 1 || kappa > values.size())
        throw DataError("kappa must be in [1, " + std::to_string(values.size()) + "], got " +
                        std::to_string(kappa));
    std::vector<int> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values(a) > values(b); });
    order.resize(static_cast<std::size_t>(kappa));
    return order;
}

double kmax_average(const Vector& values, int kappa) {
    auto selected = kmax_indices(values, kappa);
    double sum = 0;
    for (int idx : selected)
        sum += values(idx);
    return sum / static_cast<double>(kappa);
}

namespace {

struct DirGrads {
    Matrix d_input; // lambda x in
};

// Backward through one direction of one layer. d_out holds dL/dh_t for this
// direction's half of the concatenated output.
DirGrads backward_direction(const ModelParams& params, int layer, int dir,
                            const ForwardTrace& trace, const Matrix& d_out,
                            ModelParams& grads) {
    const CellParams& cell = params.cells[layer * 2 + dir];
    CellParams& gcell = grads.cells[layer * 2 + dir];
    const ForwardTrace::DirTrace& dtrace = trace.dirs[layer * 2 + dir];
    const ModelHyper& hp = params.hyper;
    int lambda = static_cast<int>(d_out.rows());
    bool lstm = hp.cell == CellKind::Lstm;

    DirGrads out;
    out.d_input = Matrix::Zero(lambda, trace.layer_inputs[layer].cols());

    Vector dh_carry = Vector::Zero(hp.hidden);
    Vector dc_carry = Vector::Zero(hp.hidden);
    // Walk the direction's processing order in reverse.
    for (int step = lambda - 1; step >= 0; --step) {
        int t = dir == 0 ? step : lambda - 1 - step;
        Vector dh = d_out.row(t).transpose() + dh_carry;
        const Vector& x = dtrace.x[t];
        if (!lstm) {
            const Vector& z = dtrace.gates[t][0];
            const Vector& r = dtrace.gates[t][1];
            const Vector& hc = dtrace.gates[t][2];
            const Vector& h_prev = dtrace.gates[t][3];

            Vector dz = dh.cwiseProduct(hc - h_prev);
            Vector dhc = dh.cwiseProduct(z);
            Vector dh_prev = dh.cwiseProduct(Vector::Ones(hp.hidden) - z);

            Vector dhc_pre =
                dhc.cwiseProduct(Vector::Ones(hp.hidden) - hc.cwiseProduct(hc));
            Vector rh = r.cwiseProduct(h_prev);
            gcell.w[2] += dhc_pre * x.transpose();
            gcell.u[2] += dhc_pre * rh.transpose();
            gcell.b[2] += dhc_pre;
            Vector dx = cell.w[2].transpose() * dhc_pre;
            Vector drh = cell.u[2].transpose() * dhc_pre;
            Vector dr = drh.cwiseProduct(h_prev);
            dh_prev += drh.cwiseProduct(r);

            Vector dz_pre = dz.cwiseProduct(z.cwiseProduct(Vector::Ones(hp.hidden) - z));
            gcell.w[0] += dz_pre * x.transpose();
            gcell.u[0] += dz_pre * h_prev.transpose();
            gcell.b[0] += dz_pre;
            dx += cell.w[0].transpose() * dz_pre;
            dh_prev += cell.u[0].transpose() * dz_pre;

            Vector dr_pre = dr.cwiseProduct(r.cwiseProduct(Vector::Ones(hp.hidden) - r));
            gcell.w[1] += dr_pre * x.transpose();
            gcell.u[1] += dr_pre * h_prev.transpose();
            gcell.b[1] += dr_pre;
            dx += cell.w[1].transpose() * dr_pre;
            dh_prev += cell.u[1].transpose() * dr_pre;

            out.d_input.row(t) += dx.transpose();
            dh_carry = dh_prev;
        } else {
            const Vector& i = dtrace.gates[t][0];
            const Vector& f = dtrace.gates[t][1];
            const Vector& o = dtrace.gates[t][2];
            const Vector& g = dtrace.gates[t][3];
            const Vector& h_prev = dtrace.gates[t][4];
            const Vector& c_prev = dtrace.gates[t][5];
            const Vector& ct = dtrace.c_tanh[t];

            Vector do_ = dh.cwiseProduct(ct);
            Vector dc = dc_carry +
                        dh.cwiseProduct(o).cwiseProduct(Vector::Ones(hp.hidden) -
                                                        ct.cwiseProduct(ct));
            Vector di = dc.cwiseProduct(g);
            Vector dg = dc.cwiseProduct(i);
            Vector df = dc.cwiseProduct(c_prev);
            Vector dc_prev = dc.cwiseProduct(f);

            Vector di_pre = di.cwiseProduct(i.cwiseProduct(Vector::Ones(hp.hidden) - i));
            Vector df_pre = df.cwiseProduct(f.cwiseProduct(Vector::Ones(hp.hidden) - f));
            Vector do_pre = do_.cwiseProduct(o.cwiseProduct(Vector::Ones(hp.hidden) - o));
            Vector dg_pre = dg.cwiseProduct(Vector::Ones(hp.hidden) - g.cwiseProduct(g));

            const std::vector<const Vector*> pres = {&di_pre, &df_pre, &do_pre, &dg_pre};
            Vector dx = Vector::Zero(x.size());
            Vector dh_prev = Vector::Zero(hp.hidden);
            for (int gate = 0; gate < 4; ++gate) {
                gcell.w[gate] += *pres[gate] * x.transpose();
                gcell.u[gate] += *pres[gate] * h_prev.transpose();
                gcell.b[gate] += *pres[gate];
                dx += cell.w[gate].transpose() * *pres[gate];
                dh_prev += cell.u[gate].transpose() * *pres[gate];
            }
            out.d_input.row(t) += dx.transpose();
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
    }
    return out;
}

} // namespace

double loss_and_backward(const ModelParams& params, const ForwardTrace& trace,
                         const Vector& mask, double target, ModelParams& grads) {
    const ModelHyper& hp = params.hyper;
    int lambda = static_cast<int>(trace.activations.size());

    Vector masked = multiply_layer(trace.activations, mask);
    auto selected = kmax_indices(masked, hp.kappa);
    double o = 0;
    for (int idx : selected)
        o += masked(idx);
    o /= hp.kappa;

    double loss = -(target * std::log(o) + (1.0 - target) * std::log(1.0 - o));
    if (!std::isfinite(loss))
        throw DataError("non-finite loss (pooled score " + std::to_string(o) + ")");

    double dout = (-target / o + (1.0 - target) / (1.0 - o)) / hp.kappa;
    // Through kappa-max: only the selected positions receive gradient; through
    // the multiply layer the mask gates it.
    Vector d_act = Vector::Zero(lambda);
    for (int idx : selected)
        d_act(idx) += dout * mask(idx);

    // Dense + sigmoid per token.
    Matrix d_top = Matrix::Zero(lambda, 2 * hp.hidden);
    const Matrix& top = trace.layer_outputs[hp.layers - 1];
    for (int t = 0; t < lambda; ++t) {
        if (d_act(t) == 0.0)
            continue;
        double a = trace.activations(t);
        double d_pre = d_act(t) * a * (1.0 - a);
        grads.act_w += d_pre * trace.dense_pre[t];
        grads.act_b += d_pre;
        Vector du = d_pre * params.act_w;
        grads.dense_w += du * top.row(t);
        grads.dense_b += du;
        d_top.row(t) += (params.dense_w.transpose() * du).transpose();
    }

    // Recurrent stack, top layer down.
    Matrix d_layer_out = d_top;
    for (int layer = hp.layers - 1; layer >= 0; --layer) {
        if (!trace.dropout_masks.empty())
            d_layer_out = d_layer_out.cwiseProduct(trace.dropout_masks[layer]);
        Matrix d_fwd = d_layer_out.leftCols(hp.hidden);
        Matrix d_bwd = d_layer_out.rightCols(hp.hidden);
        Matrix pad_f = Matrix::Zero(lambda, 2 * hp.hidden);
        pad_f.leftCols(hp.hidden) = d_fwd;
        Matrix pad_b = Matrix::Zero(lambda, 2 * hp.hidden);
        pad_b.rightCols(hp.hidden) = d_bwd;
        auto g_fwd = backward_direction(params, layer, 0, trace,
                                        pad_f.leftCols(hp.hidden), grads);
        auto g_bwd = backward_direction(params, layer, 1, trace,
                                        pad_b.rightCols(hp.hidden), grads);
        d_layer_out = g_fwd.d_input + g_bwd.d_input;
    }
    return loss;
}

double pooled_score(const ModelParams& params, const Matrix& input, const Vector& mask) {
    auto trace = model_forward(params, input);
    Vector masked = multiply_layer(trace.activations, mask);
    return kmax_average(masked, params.hyper.kappa);
}

std::string write_model(const ModelParams& params) {
    std::ostringstream out;
    const ModelHyper& hp = params.hyper;
    out << "# vulnloc-model v1\n";
    out << "cell=" << (hp.cell == CellKind::Gru ? "gru" : "lstm") << " input=" << hp.input_dim
        << " hidden=" << hp.hidden << " dense=" << hp.dense_dim << " layers=" << hp.layers
        << " kappa=" << hp.kappa << " dropout=" << format_double(hp.dropout) << "\n";
    auto matrix = [&](const std::string& name, const Matrix& m) {
        out << "W " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = 0; j < m.cols(); ++j) {
                if (j)
                    out << ' ';
                out << format_double(m(i, j));
            }
            out << '\n';
        }
    };
    auto vector = [&](const std::string& name, const Vector& v) {
        out << "V " << name << ' ' << v.size() << '\n';
        for (int i = 0; i < v.size(); ++i) {
            if (i)
                out << ' ';
            out << format_double(v(i));
        }
        out << '\n';
    };
    static const char* gru_gates[] = {"z", "r", "h"};
    static const char* lstm_gates[] = {"i", "f", "o", "g"};
    for (int layer = 0; layer < hp.layers; ++layer)
        for (int dir = 0; dir < 2; ++dir) {
            const CellParams& cell = params.cells[layer * 2 + dir];
            std::string prefix =
                "l" + std::to_string(layer) + (dir == 0 ? "f" : "b") + ".";
            for (std::size_t g = 0; g < cell.w.size(); ++g) {
                const char* gate =
                    hp.cell == CellKind::Gru ? gru_gates[g] : lstm_gates[g];
                matrix(prefix + "w" + gate, cell.w[g]);
                matrix(prefix + "u" + gate, cell.u[g]);
                vector(prefix + "b" + gate, cell.b[g]);
            }
        }
    matrix("dense.w", params.dense_w);
    vector("dense.b", params.dense_b);
    vector("act.w", params.act_w);
    out << "S act.b " << format_double(params.act_b) << '\n';
    return out.str();
}

ModelParams read_model(const std::string& text) {
    auto lines = split(text, '\n');
    if (lines.size() < 2 || lines[0].rfind("# vulnloc-model", 0) != 0)
        throw FormatError("model file missing version header");
    ModelHyper hp;
    for (const auto& field : split_ws(lines[1])) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
            continue;
        auto key = field.substr(0, eq);
        auto value = field.substr(eq + 1);
        if (key == "cell")
            hp.cell = value == "lstm" ? CellKind::Lstm : CellKind::Gru;
        else if (key == "input")
            hp.input_dim = static_cast<int>(parse_long(value, "model input dim"));
        else if (key == "hidden")
            hp.hidden = static_cast<int>(parse_long(value, "model hidden"));
        else if (key == "dense")
            hp.dense_dim = static_cast<int>(parse_long(value, "model dense dim"));
        else if (key == "layers")
            hp.layers = static_cast<int>(parse_long(value, "model layers"));
        else if (key == "kappa")
            hp.kappa = static_cast<int>(parse_long(value, "model kappa"));
        else if (key == "dropout")
            hp.dropout = parse_double(value, "model dropout");
    }
    ModelParams params = ModelParams::init(hp, 0);
    std::size_t i = 2;
    auto read_matrix = [&](Matrix& m) {
        auto header = split_ws(lines[i]);
        long rows = parse_long(header[2], "matrix rows");
        long cols = parse_long(header[3], "matrix cols");
        m.resize(rows, cols);
        ++i;
        for (long r = 0; r < rows; ++r, ++i) {
            auto values = split_ws(lines[i]);
            if (static_cast<long>(values.size()) != cols)
                throw FormatError("model matrix row has wrong width");
            for (long c = 0; c < cols; ++c)
                m(r, c) = parse_double(values[c], "model weight");
        }
    };
    auto read_vector = [&](Vector& v) {
        auto header = split_ws(lines[i]);
        long size = parse_long(header[2], "vector size");
        ++i;
        auto values = split_ws(lines[i]);
        if (static_cast<long>(values.size()) != size)
            throw FormatError("model vector has wrong length");
        v.resize(size);
        for (long k = 0; k < size; ++k)
            v(k) = parse_double(values[k], "model weight");
        ++i;
    };
    for (int layer = 0; layer < hp.layers; ++layer)
        for (int dir = 0; dir < 2; ++dir) {
            CellParams& cell = params.cells[layer * 2 + dir];
            for (std::size_t g = 0; g < cell.w.size(); ++g) {
                read_matrix(cell.w[g]);
                read_matrix(cell.u[g]);
                read_vector(cell.b[g]);
            }
        }
    read_matrix(params.dense_w);
    read_vector(params.dense_b);
    read_vector(params.act_w);
    if (i >= lines.size() || lines[i].rfind("S act.b ", 0) != 0)
        throw FormatError("model file missing scalar bias");
    params.act_b = parse_double(lines[i].substr(8), "model act bias");
    return params;
}

} // namespace vulnloc
