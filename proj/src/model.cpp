#include "dfd/model.hpp"

#include <cstring>
#include <fstream>

namespace dfd {

namespace {
constexpr char kMagic[4] = {'D', 'F', 'D', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& f, T& v) {
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::CnnLeaky: return "cnn-leaky";
    case ModelVariant::CnnLstmLeaky: return "cnn-lstm-leaky";
    case ModelVariant::CnnLstmAttnLeaky: return "cnn-lstm-attn-leaky";
    case ModelVariant::CnnLstmAttnRelu: return "cnn-lstm-attn-relu";
  }
  return "?";
}

std::optional<ModelVariant> variant_from_name(std::string_view name) {
  for (ModelVariant v : kAllVariants) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

bool Model::has_lstm() const { return variant_ != ModelVariant::CnnLeaky; }

bool Model::has_attention() const {
  return variant_ == ModelVariant::CnnLstmAttnLeaky ||
         variant_ == ModelVariant::CnnLstmAttnRelu;
}

Model::Model(ModelVariant variant, int n_classes, std::uint64_t seed)
    : variant_(variant),
      n_classes_(n_classes),
      seed_(seed),
      alpha_(variant == ModelVariant::CnnLstmAttnRelu ? 0.0 : 0.3),
      bn1_(1),
      bn2_(dims_.conv1_ch),
      bn3_(dims_.conv1_ch),
      bn4_(dims_.conv2_ch),
      bn5_(dims_.conv2_ch),
      bn6_(dims_.conv3_ch),
      conv1_(1, dims_.conv1_ch),
      conv2_(dims_.conv1_ch, dims_.conv2_ch),
      conv3_(dims_.conv2_ch, dims_.conv3_ch),
      pool1_(2, 4),
      pool2_(2, 4),
      fc1_(variant == ModelVariant::CnnLeaky
               ? (dims_.frames / 4) * (dims_.mels / 16) * dims_.conv3_ch
               : dims_.lstm_hidden,
           dims_.fc1_units),
      fc2_(dims_.fc1_units, static_cast<std::size_t>(n_classes)),
      fc1_act_(variant == ModelVariant::CnnLstmAttnRelu ? 0.0 : 0.3) {
  if (n_classes < 2) throw ModelError("model: n_classes must be >= 2");
  acts_.assign(6, LeakyRelu(alpha_));
  if (has_lstm()) {
    const std::size_t feat = (dims_.mels / 16) * dims_.conv3_ch;  // 6 * 256
    lstm_ = std::make_unique<Lstm>(feat, dims_.lstm_hidden);
  }
  if (has_attention()) attn_ = std::make_unique<Attention>(dims_.lstm_hidden);

  Rng rng(seed);
  conv1_.init(rng);
  conv2_.init(rng);
  conv3_.init(rng);
  if (lstm_) lstm_->init(rng);
  if (attn_) attn_->init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

Tensor Model::run_forward(const Tensor& x, Mode mode, bool want_probs) {
  if (x.ndim() != 4 || x.dim(1) != dims_.frames || x.dim(2) != dims_.mels ||
      x.dim(3) != 1) {
    throw ShapeError("model: expected input {B, frames, mels, 1}");
  }
  last_batch_ = x.dim(0);
  trace_.clear();
  trace_.emplace_back("input", x.shape);

  Tensor t = acts_[0].forward(bn1_.forward(x, mode));
  t = conv1_.forward(t);
  trace_.emplace_back("conv1", t.shape);
  t = acts_[1].forward(bn2_.forward(t, mode));
  t = pool1_.forward(t);
  trace_.emplace_back("pool1", t.shape);

  t = acts_[2].forward(bn3_.forward(t, mode));
  t = conv2_.forward(t);
  trace_.emplace_back("conv2", t.shape);
  t = acts_[3].forward(bn4_.forward(t, mode));
  t = pool2_.forward(t);
  trace_.emplace_back("pool2", t.shape);

  t = acts_[4].forward(bn5_.forward(t, mode));
  t = conv3_.forward(t);
  trace_.emplace_back("conv3", t.shape);
  t = acts_[5].forward(bn6_.forward(t, mode));

  pre_head_shape_ = t.shape;  // {B, 25, 6, C3}
  const std::size_t B = t.dim(0);

  Tensor head;
  if (!has_lstm()) {
    head = std::move(t);
    head.shape = {B, head.size() / B};
    trace_.emplace_back("flatten", head.shape);
  } else {
    const std::size_t steps = t.dim(1);
    const std::size_t feat = t.dim(2) * t.dim(3);
    t.shape = {B, steps, feat};  // contiguous reinterpretation
    Tensor h = lstm_->forward(t);
    trace_.emplace_back("lstm", h.shape);
    if (has_attention()) {
      head = attn_->forward(h);
      trace_.emplace_back("attention", head.shape);
    } else {
      // no attention: classify from the final hidden state
      head = Tensor({B, dims_.lstm_hidden});
      for (std::size_t b = 0; b < B; ++b) {
        std::copy_n(h.ptr() + (b * steps + steps - 1) * dims_.lstm_hidden,
                    dims_.lstm_hidden, head.ptr() + b * dims_.lstm_hidden);
      }
      trace_.emplace_back("last-hidden", head.shape);
    }
  }

  Tensor z = fc1_act_.forward(fc1_.forward(head));
  trace_.emplace_back("fc1", z.shape);
  z = fc2_.forward(z);
  trace_.emplace_back("fc2", z.shape);

  return want_probs ? softmax(z) : z;
}

Tensor Model::forward(const Tensor& x, Mode mode) { return run_forward(x, mode, true); }

Tensor Model::forward_logits(const Tensor& x, Mode mode) {
  return run_forward(x, mode, false);
}

void Model::backward(const Tensor& dlogits) {
  Tensor d = fc2_.backward(dlogits);
  d = fc1_.backward(fc1_act_.backward(d));

  const std::size_t B = last_batch_;
  Tensor dt;
  if (!has_lstm()) {
    d.shape = pre_head_shape_;
    dt = std::move(d);
  } else {
    const std::size_t steps = pre_head_shape_[1];
    const std::size_t H = dims_.lstm_hidden;
    Tensor dh;
    if (has_attention()) {
      dh = attn_->backward(d);
    } else {
      dh = Tensor({B, steps, H});
      for (std::size_t b = 0; b < B; ++b) {
        std::copy_n(d.ptr() + b * H, H, dh.ptr() + (b * steps + steps - 1) * H);
      }
    }
    dt = lstm_->backward(dh);
    dt.shape = pre_head_shape_;
  }

  dt = bn6_.backward(acts_[5].backward(dt));
  dt = conv3_.backward(dt);
  dt = bn5_.backward(acts_[4].backward(dt));

  dt = pool2_.backward(dt);
  dt = bn4_.backward(acts_[3].backward(dt));
  dt = conv2_.backward(dt);
  dt = bn3_.backward(acts_[2].backward(dt));

  dt = pool1_.backward(dt);
  dt = bn2_.backward(acts_[1].backward(dt));
  dt = conv1_.backward(dt);
  bn1_.backward(acts_[0].backward(dt));
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> ps = {&conv1_.w, &conv1_.b, &conv2_.w, &conv2_.b,
                                &conv3_.w, &conv3_.b};
  for (BatchNorm* bn : {&bn1_, &bn2_, &bn3_, &bn4_, &bn5_, &bn6_}) {
    ps.push_back(&bn->gamma);
    ps.push_back(&bn->beta);
  }
  if (lstm_) {
    ps.push_back(&lstm_->w_in);
    ps.push_back(&lstm_->w_rec);
    ps.push_back(&lstm_->bias);
  }
  if (attn_) ps.push_back(&attn_->w);
  ps.push_back(&fc1_.w);
  ps.push_back(&fc1_.b);
  ps.push_back(&fc2_.w);
  ps.push_back(&fc2_.b);
  return ps;
}

std::vector<Tensor*> Model::state_tensors() {
  std::vector<Tensor*> ts;
  for (Parameter* p : parameters()) ts.push_back(&p->value);
  for (BatchNorm* bn : {&bn1_, &bn2_, &bn3_, &bn4_, &bn5_, &bn6_}) {
    ts.push_back(&bn->running_mean);
    ts.push_back(&bn->running_var);
  }
  return ts;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (Parameter* p : parameters()) n += p->value.size();
  return n;
}

void Model::zero_grads() {
  for (Parameter* p : parameters()) p->zero_grad();
}

const Tensor& Model::attention_weights() const {
  static const Tensor empty;
  return attn_ ? attn_->alphas() : empty;
}

void Model::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ModelError("cannot write " + path);
  f.write(kMagic, 4);
  write_pod(f, kVersion);
  write_pod(f, static_cast<std::uint8_t>(variant_));
  write_pod(f, static_cast<std::uint32_t>(n_classes_));
  write_pod(f, seed_);
  write_pod(f, static_cast<std::uint8_t>(bn1_.initialized ? 1 : 0));

  auto* self = const_cast<Model*>(this);
  for (const Tensor* t : self->state_tensors()) {
    write_pod(f, static_cast<std::uint32_t>(t->ndim()));
    for (std::size_t d : t->shape) write_pod(f, static_cast<std::uint64_t>(d));
    f.write(reinterpret_cast<const char*>(t->ptr()),
            static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!f) throw ModelError("short write to " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  std::uint32_t version = 0;
  read_pod(f, version);
  if (!f || std::memcmp(magic, kMagic, 4) != 0) {
    throw ModelError("bad model magic in " + path);
  }
  if (version != kVersion) throw ModelError("unsupported model version in " + path);

  std::uint8_t variant_raw = 0, bn_init = 0;
  std::uint32_t n_classes = 0;
  std::uint64_t seed = 0;
  read_pod(f, variant_raw);
  read_pod(f, n_classes);
  read_pod(f, seed);
  read_pod(f, bn_init);
  if (!f || variant_raw > 3 || n_classes < 2) {
    throw ModelError("corrupt model header in " + path);
  }

  Model m(static_cast<ModelVariant>(variant_raw), static_cast<int>(n_classes), seed);
  for (Tensor* t : m.state_tensors()) {
    std::uint32_t ndim = 0;
    read_pod(f, ndim);
    if (!f || ndim != t->ndim()) throw ModelError("corrupt model payload in " + path);
    for (std::size_t i = 0; i < ndim; ++i) {
      std::uint64_t d = 0;
      read_pod(f, d);
      if (!f || d != t->shape[i]) throw ModelError("corrupt model payload in " + path);
    }
    f.read(reinterpret_cast<char*>(t->ptr()),
           static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!f) throw ModelError("truncated model payload in " + path);
  }
  for (BatchNorm* bn : {&m.bn1_, &m.bn2_, &m.bn3_, &m.bn4_, &m.bn5_, &m.bn6_}) {
    bn->initialized = bn_init != 0;
  }
  return m;
}

}  // namespace dfd
