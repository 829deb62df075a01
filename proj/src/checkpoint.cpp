// Copyright 2026 The orthospinn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "orthospinn/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <variant>

#include <fmt/format.h>

namespace orthospinn {

namespace {

constexpr const char *kMagic = "orthospinn-checkpoint";
constexpr int kVersion = 1;

std::string real(double v) { return fmt::format("{:.17g}", v); }

void write_vector(std::ostream &out, const char *tag, const Eigen::VectorXd &v) {
    out << tag << ' ' << v.size();
    for (double x : v) {
        out << ' ' << real(x);
    }
    out << '\n';
}

void write_matrix(std::ostream &out, const char *tag, const Eigen::MatrixXd &m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out << ' ' << real(m(i, j));
        }
    }
    out << '\n';
}

const char *activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

void write_pyramid(std::ostream &out, const PyramidLayer &l) {
    out << "pyramid " << l.wires << ' ' << l.d_in << ' ' << l.d_out << ' '
        << (l.input_kind == InputKind::raw ? "raw" : "unit") << ' ' << real(l.input_bound) << ' '
        << activation_name(l.activation) << '\n';
    write_vector(out, "thetas", l.thetas);
    write_vector(out, "bias", l.bias);
}

void write_layers(std::ostream &out, const char *tag, const std::vector<Layer> &layers) {
    out << tag << ' ' << layers.size() << '\n';
    for (const auto &layer : layers) {
        out << "layer ";
        if (const auto *p = std::get_if<PyramidLayer>(&layer)) {
            write_pyramid(out, *p);
        } else if (const auto *r = std::get_if<ResBlock>(&layer)) {
            out << "resblock ";
            write_pyramid(out, r->inner);
        } else {
            const auto &d = std::get<DenseLayer>(layer);
            out << "dense " << activation_name(d.activation) << ' ' << real(d.dropout) << '\n';
            write_matrix(out, "W", d.W);
            write_vector(out, "b", d.b);
        }
    }
}

class Reader {
  public:
    explicit Reader(std::istream &in) : in_(in) {}

    std::string word() {
        std::string w;
        if (!(in_ >> w)) {
            throw std::runtime_error("checkpoint: unexpected end of input");
        }
        return w;
    }
    void expect(const std::string &w) {
        const std::string got = word();
        if (got != w) {
            throw std::runtime_error(fmt::format("checkpoint: expected '{}', found '{}'", w, got));
        }
    }
    long integer() {
        const std::string w = word();
        char *end = nullptr;
        const long v = std::strtol(w.c_str(), &end, 10);
        if (end != w.c_str() + w.size()) {
            throw std::runtime_error(fmt::format("checkpoint: '{}' is not an integer", w));
        }
        return v;
    }
    double number() {
        const std::string w = word();
        char *end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size()) {
            throw std::runtime_error(fmt::format("checkpoint: '{}' is not a number", w));
        }
        return v;
    }
    Eigen::VectorXd vector(const std::string &tag) {
        expect(tag);
        const long n = count();
        Eigen::VectorXd v(n);
        for (auto &x : v) {
            x = number();
        }
        return v;
    }
    Eigen::MatrixXd matrix(const std::string &tag) {
        expect(tag);
        const long r = count();
        const long c = count();
        Eigen::MatrixXd m(r, c);
        for (long j = 0; j < c; ++j) {
            for (long i = 0; i < r; ++i) {
                m(i, j) = number();
            }
        }
        return m;
    }
    long count() {
        const long n = integer();
        if (n < 0 || n > 100'000'000) {
            throw std::runtime_error(fmt::format("checkpoint: implausible size {}", n));
        }
        return n;
    }
    Activation activation() {
        const std::string w = word();
        if (w == "tanh") {
            return Activation::tanh;
        }
        if (w == "identity") {
            return Activation::identity;
        }
        throw std::runtime_error(fmt::format("checkpoint: unknown activation '{}'", w));
    }

  private:
    std::istream &in_;
};

PyramidLayer read_pyramid(Reader &r) {
    PyramidLayer l;
    l.wires = static_cast<int>(r.count());
    l.d_in = static_cast<int>(r.count());
    l.d_out = static_cast<int>(r.count());
    const std::string kind = r.word();
    if (kind != "raw" && kind != "unit") {
        throw std::runtime_error(fmt::format("checkpoint: unknown input kind '{}'", kind));
    }
    l.input_kind = kind == "raw" ? InputKind::raw : InputKind::unit;
    l.input_bound = r.number();
    l.activation = r.activation();
    if (l.wires < std::max(l.loaded_dim(), l.d_out) || l.wires < 2) {
        throw std::runtime_error("checkpoint: pyramid wire count too small for its dimensions");
    }
    l.gates = pyramid_gate_sequence(l.wires);
    l.thetas = r.vector("thetas");
    l.bias = r.vector("bias");
    if (l.thetas.size() != static_cast<Eigen::Index>(l.gates.size()) || l.bias.size() != l.d_out) {
        throw std::runtime_error("checkpoint: pyramid parameter sizes do not match its dimensions");
    }
    return l;
}

std::vector<Layer> read_layers(Reader &r, const std::string &tag) {
    r.expect(tag);
    const long n = r.count();
    std::vector<Layer> layers;
    for (long i = 0; i < n; ++i) {
        r.expect("layer");
        const std::string kind = r.word();
        if (kind == "pyramid") {
            layers.emplace_back(read_pyramid(r));
        } else if (kind == "resblock") {
            r.expect("pyramid");
            ResBlock b{read_pyramid(r)};
            if (b.inner.d_in != b.inner.d_out) {
                throw std::runtime_error("checkpoint: residual block must be square");
            }
            layers.emplace_back(std::move(b));
        } else if (kind == "dense") {
            DenseLayer d;
            d.activation = r.activation();
            d.dropout = r.number();
            d.W = r.matrix("W");
            d.b = r.vector("b");
            if (d.b.size() != d.W.rows()) {
                throw std::runtime_error("checkpoint: dense bias size mismatch");
            }
            layers.emplace_back(std::move(d));
        } else {
            throw std::runtime_error(fmt::format("checkpoint: unknown layer kind '{}'", kind));
        }
    }
    for (std::size_t i = 1; i < layers.size(); ++i) {
        if (layer_d_in(layers[i]) != layer_d_out(layers[i - 1])) {
            throw std::runtime_error("checkpoint: consecutive layer dimensions do not match");
        }
    }
    return layers;
}

}  // namespace

void write_checkpoint(std::ostream &out, const Checkpoint &ckpt) {
    const SpinnModel &m = ckpt.model;
    out << kMagic << ' ' << kVersion << '\n';
    out << "combiner " << (m.combiner == Combiner::product_sum ? "product_sum" : "concat") << '\n';
    out << "param " << (ckpt.param ? real(*ckpt.param) : std::string("none")) << '\n';
    out << "subnets " << m.subnets.size() << '\n';
    for (const auto &s : m.subnets) {
        out << "subnet " << real(s.domain.lo) << ' ' << real(s.domain.hi) << ' '
            << (s.encoding == InputEncoding::sincos ? "sincos" : "raw") << ' ' << real(s.input_half_range) << '\n';
        write_layers(out, "layers", s.layers);
    }
    write_layers(out, "trunk", m.trunk);
    if (m.gp) {
        out << "gp " << real(m.gp->gamma) << '\n';
        write_matrix(out, "W_L", m.gp->W_L);
        write_vector(out, "b_L", m.gp->b_L);
        write_vector(out, "beta", m.gp->beta);
        if (m.gp->Sigma) {
            write_matrix(out, "Sigma", *m.gp->Sigma);
        } else {
            out << "Sigma none\n";
        }
    } else {
        out << "gp none\n";
    }
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream &in) {
    Reader r(in);
    r.expect(kMagic);
    if (r.integer() != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version");
    }
    Checkpoint ckpt;
    SpinnModel &m = ckpt.model;
    r.expect("combiner");
    const std::string comb = r.word();
    if (comb != "product_sum" && comb != "concat") {
        throw std::runtime_error(fmt::format("checkpoint: unknown combiner '{}'", comb));
    }
    m.combiner = comb == "product_sum" ? Combiner::product_sum : Combiner::concat;
    r.expect("param");
    if (const std::string p = r.word(); p != "none") {
        char *end = nullptr;
        ckpt.param = std::strtod(p.c_str(), &end);
        if (end != p.c_str() + p.size()) {
            throw std::runtime_error(fmt::format("checkpoint: bad parameter value '{}'", p));
        }
    }
    r.expect("subnets");
    const long K = r.count();
    for (long k = 0; k < K; ++k) {
        r.expect("subnet");
        Subnet s;
        s.domain.lo = r.number();
        s.domain.hi = r.number();
        const std::string enc = r.word();
        if (enc != "sincos" && enc != "raw") {
            throw std::runtime_error(fmt::format("checkpoint: unknown encoding '{}'", enc));
        }
        s.encoding = enc == "sincos" ? InputEncoding::sincos : InputEncoding::raw;
        s.input_half_range = r.number();
        s.layers = read_layers(r, "layers");
        m.subnets.push_back(std::move(s));
    }
    m.trunk = read_layers(r, "trunk");
    r.expect("gp");
    if (const std::string g = r.word(); g != "none") {
        GpHead head;
        char *end = nullptr;
        head.gamma = std::strtod(g.c_str(), &end);
        if (end != g.c_str() + g.size()) {
            throw std::runtime_error(fmt::format("checkpoint: bad gamma '{}'", g));
        }
        head.W_L = r.matrix("W_L");
        head.b_L = r.vector("b_L");
        head.beta = r.vector("beta");
        r.expect("Sigma");
        // Peek: either "none" or the matrix dimensions.
        const std::string first = r.word();
        if (first != "none") {
            char *e1 = nullptr;
            const long rows = std::strtol(first.c_str(), &e1, 10);
            const long cols = r.count();
            if (e1 != first.c_str() + first.size() || rows != cols || rows != head.features()) {
                throw std::runtime_error("checkpoint: posterior covariance has the wrong shape");
            }
            Eigen::MatrixXd S(rows, cols);
            for (long j = 0; j < cols; ++j) {
                for (long i = 0; i < rows; ++i) {
                    S(i, j) = r.number();
                }
            }
            head.Sigma = std::move(S);
        }
        if (head.b_L.size() != head.features() || head.beta.size() != head.features()) {
            throw std::runtime_error("checkpoint: GP head sizes do not match");
        }
        m.gp = std::move(head);
    }
    r.expect("end");
    return ckpt;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write '{}'", path));
    }
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read '{}'", path));
    }
    return read_checkpoint(in);
}

}  // namespace orthospinn
