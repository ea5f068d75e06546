import init, { closed_form, explore, tomography } from "./pkg/spintomo_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function show(target, reply, render) {
  const data = JSON.parse(reply);
  if (!data.ok) {
    $(target).innerHTML = `<p class="error">${escape(data.error)}</p>`;
    return;
  }
  $(target).innerHTML = render(data);
}

function escape(text) {
  const d = document.createElement("div");
  d.textContent = String(text);
  return d.innerHTML;
}

const fmt = (x, digits = 6) => (x === null || x === undefined ? "-" : Number(x).toFixed(digits));

function renderExplore(d) {
  const rows = d.terms
    .map((t) => `<tr><td>${escape(t.pauli)}</td><td>${fmt(t.coefficient)}</td></tr>`)
    .join("");
  return `<p>${escape(d.sequence)}: ${d.pair_gates} pair gate(s), pair time ${fmt(d.pair_time, 4)},
    sum of squares ${fmt(d.norm_sqr, 12)}</p>
    <table><tr><th>Pauli</th><th>coefficient</th></tr>${rows}</table>
    <pre>${escape(d.probability)}</pre>`;
}

function renderMatrix(m) {
  return m
    .map((row) => row.map(([re, im]) => `${re >= 0 ? " " : ""}${re.toFixed(4)}${im >= 0 ? "+" : "-"}${Math.abs(im).toFixed(4)}i`).join("  "))
    .join("\n");
}

function renderClosedForm(d) {
  return `<p>gamma ${fmt(d.gamma)}, beta ${fmt(d.beta)}, phi ${fmt(d.phi)}, b ${fmt(d.b)}</p>
    <p>Frobenius distance to the exponential: <b>${d.deviation.toExponential(3)}</b></p>
    <pre>${renderMatrix(d.closed_form)}</pre>`;
}

function renderTomography(d) {
  const rows = d.settings
    .map((s) => `<tr><td>${escape(s.target)}</td><td>${escape(s.sequence)}</td><td>${s.pom_qubit}</td><td>${fmt(s.p_hat, 5)}</td></tr>`)
    .join("");
  const mle = d.mle
    ? `MLE: ${d.mle.iterations} iterations, log-likelihood ${fmt(d.mle.initial_log_likelihood, 3)} to ${fmt(d.mle.final_log_likelihood, 3)}`
    : "";
  return `<p>Linear inversion eigenvalues: ${d.raw_eigenvalues.map((e) => fmt(e, 4)).join(", ")}
    (${d.raw_physical ? "physical" : "not physical"})</p>
    <p>Fidelity projected <b>${fmt(d.fidelity_projected)}</b>, refined <b>${fmt(d.fidelity_refined)}</b>.
    ${mle}</p>
    <table><tr><th>target</th><th>sequence</th><th>readout</th><th>p&#770;</th></tr>${rows}</table>`;
}

async function main() {
  await init();
  $("status").textContent = "Ready.";
  $("em-run").onclick = () =>
    show("em-out", explore($("em-model").value, $("em-mode").value, num("em-n"), $("em-seq").value, num("em-pom")), renderExplore);
  $("cf-run").onclick = () =>
    show("cf-out", closed_form(num("cf-jx"), num("cf-jy"), num("cf-jz"), num("cf-ez"), num("cf-t")), renderClosedForm);
  $("tm-run").onclick = () => {
    $("tm-out").textContent = "Running...";
    setTimeout(() =>
      show(
        "tm-out",
        tomography($("tm-model").value, $("tm-mode").value, num("tm-n"), num("tm-shots"), num("tm-seed"), $("tm-pure").checked),
        renderTomography,
      ),
    );
  };
  $("em-run").click();
  $("cf-run").click();
}

main().catch((e) => {
  $("status").innerHTML = `<span class="error">${escape(e)}</span>`;
});
