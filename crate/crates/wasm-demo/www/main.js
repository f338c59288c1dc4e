import init, { score, bracketings, train } from "./pkg/folreward_wasm.js";

const $ = (id) => document.getElementById(id);

function show(el, fn) {
  el.classList.remove("error");
  try {
    return fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e);
  }
}

function onScore() {
  const out = $("score-out");
  show(out, () => {
    const r = JSON.parse(score($("pred").value, $("ref").value, $("mode").value,
      Number($("threshold").value), Number($("score-chunk").value)));
    const pairs = r.binding.pairs.map(([p, q]) => `  ${p.canonical_text}  ↦  ${q.canonical_text}`).join("\n") || "  (none)";
    out.textContent =
      `score ${r.score.toFixed(4)}\n` +
      `best reading  ${r.best_tree}\n` +
      `binding\n${pairs}\n` +
      `atoms ${r.pred_atoms}/${r.ref_atoms}, bindings explored ${r.bindings_explored}, ` +
      `readings ${r.trees_explored}${r.truncated ? ", truncated" : ""}`;
  });
}

function onChain() {
  const out = $("chain-out");
  show(out, () => {
    const r = JSON.parse(bracketings($("chain").value, Number($("chain-chunk").value)));
    const list = (t) => t.trees.map((s) => "  " + s).join("\n");
    out.textContent =
      `all readings: ${r.full.count}\n${list(r.full)}\n\n` +
      `chunked: ${r.chunked.count} (partial trees built ${r.chunked.stats.partial_trees})\n${list(r.chunked)}`;
  });
}

function plot(rows) {
  const c = $("curve");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const pad = 24;
  const x = (i) => pad + (i / Math.max(rows.length - 1, 1)) * (c.width - 2 * pad);
  const y = (v) => c.height - pad - v * (c.height - 2 * pad);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, c.width - 2 * pad, c.height - 2 * pad);
  g.fillText("1", 6, y(1) + 4);
  g.fillText("0", 6, y(0) + 4);
  g.strokeStyle = "#1565c0";
  g.beginPath();
  rows.forEach((r, i) => (i ? g.lineTo : g.moveTo).call(g, x(i), y(r.mean_reward)));
  g.stroke();
}

function onTrain() {
  const note = $("train-note");
  show(note, () => {
    const rows = JSON.parse(train(Number($("iters").value), Number($("seed").value), Number($("lr").value)));
    plot(rows);
    const first = rows[0].mean_reward, last = rows[rows.length - 1].mean_reward;
    note.textContent = `mean reward ${first.toFixed(3)} → ${last.toFixed(3)} over ${rows.length} iterations`;
  });
}

await init();
$("score-btn").onclick = onScore;
$("chain-btn").onclick = onChain;
$("train-btn").onclick = onTrain;
onScore();
onChain();
